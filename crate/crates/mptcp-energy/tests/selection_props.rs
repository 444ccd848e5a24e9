//! Property tests for the solver and utility invariants.

use proptest::prelude::*;

use mptcp_energy::energy::power;
use mptcp_energy::path::PathSpec;
use mptcp_energy::select::{
    psp1::psp1_scan, sample_instance, solve_psp1_bruteforce, solve_psp1_greedy,
    solve_psp1_two_path, solve_psp2, solve_psp2_bruteforce, Instance, SelectionResult,
};
use mptcp_energy::utility::UtilityFunction;

fn any_utility() -> impl Strategy<Value = UtilityFunction> {
    prop_oneof![
        (0.1..3.0f64, 0.1..10.0f64).prop_map(|(a, g)| UtilityFunction::alpha_fair(a, g).unwrap()),
        (0.01..0.5f64).prop_map(|tau| UtilityFunction::new_reno(tau).unwrap()),
        (0.1..10.0f64).prop_map(|g| UtilityFunction::log(g).unwrap()),
    ]
}

proptest! {
    // U'^{-1}(U'(x)) = x to 1e-10 relative, across kinds and scales.
    #[test]
    fn deriv_inv_is_a_left_inverse(u in any_utility(), exp in -6.0..6.0f64) {
        let x = 10f64.powf(exp);
        let roundtrip = u.deriv_inv(u.deriv(x));
        prop_assert!(
            (roundtrip - x).abs() <= 1e-10 * x,
            "{u:?}: {x} -> {roundtrip}"
        );
    }

    // Average power b + theta/x is strictly decreasing on (0, c] when the
    // sunk cost is positive, and power itself is affine above zero.
    #[test]
    fn average_power_decreases(
        b in 0.0..500.0f64,
        theta in 0.1..2000.0f64,
        c in 0.1..100.0f64,
        f1 in 0.01..1.0f64,
        f2 in 0.01..1.0f64,
    ) {
        let path = PathSpec::new("p", b, theta, c).unwrap();
        let (lo, hi) = (c * f1.min(f2), c * f1.max(f2));
        prop_assume!(lo < hi);
        let avg_lo = power(&path, lo).unwrap() / lo;
        let avg_hi = power(&path, hi).unwrap() / hi;
        prop_assert!(avg_hi < avg_lo);
        // Affine segment: interpolation is exact away from the origin.
        let mid = 0.5 * (lo + hi);
        let interpolated = 0.5 * (power(&path, lo).unwrap() + power(&path, hi).unwrap());
        prop_assert!((power(&path, mid).unwrap() - interpolated).abs() < 1e-9);
    }

    // The feasible prefix objectives of the greedy scan are unimodal: once
    // the sequence falls it never rises again (1e-12 relative slack).
    #[test]
    fn greedy_prefix_objectives_are_unimodal(seed in any::<u64>()) {
        let inst = sample_instance(seed, 10);
        let scan = psp1_scan(&inst);
        let seq: Vec<f64> = scan.prefixes.iter().map(|p| p.objective).collect();
        let scale = seq.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let tol = 1e-12 * scale;
        let mut descended = false;
        for w in seq.windows(2) {
            if w[1] < w[0] - tol {
                descended = true;
            } else {
                prop_assert!(!(descended && w[1] > w[0] + tol), "second ascent in {seq:?}");
            }
        }
    }

    // Structural invariants every solver's result must satisfy.
    #[test]
    fn selection_results_are_well_formed(seed in any::<u64>()) {
        let inst = sample_instance(seed, 8);
        let mut results: Vec<SelectionResult> = vec![
            solve_psp1_greedy(&inst).unwrap(),
            solve_psp1_bruteforce(&inst).unwrap(),
            solve_psp2(&inst).unwrap(),
            solve_psp2_bruteforce(&inst).unwrap(),
        ];
        if inst.paths.len() == 2 {
            results.push(solve_psp1_two_path(&inst).unwrap());
        }
        for res in &results {
            for (id, rate) in res.rates.iter() {
                prop_assert!(rate >= 0.0);
                let cap = inst.paths.iter().find(|p| p.id == id).unwrap().c;
                prop_assert!(rate <= cap + 1e-12);
                if rate > 0.0 {
                    prop_assert!(res.chosen.iter().any(|c| c == id));
                }
            }
            prop_assert!(res.gap_certificate >= 0.0);
            let scale = res.objective.abs().max(1.0);
            prop_assert!(
                res.objective <= res.upper_bound + 1e-9 * scale,
                "{:?}: objective {} above bound {}",
                res.algorithm,
                res.objective,
                res.upper_bound
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Raising the tradeoff weight never buys more rate or more power.
    #[test]
    fn greedy_rate_and_power_monotone_in_alpha(seed in any::<u64>()) {
        let base = sample_instance(seed, 8);
        let mut prev_rate = f64::INFINITY;
        let mut prev_power = f64::INFINITY;
        for i in 0..50 {
            let alpha = 5.0 * i as f64 / 49.0;
            let inst = Instance::new(base.paths.clone(), base.utility, alpha).unwrap();
            let res = solve_psp1_greedy(&inst).unwrap();
            let rate = res.aggregate_rate();
            let pw = res.total_power(&inst.paths);
            prop_assert!(rate <= prev_rate + 1e-9, "rate rose at alpha {alpha}");
            prop_assert!(pw <= prev_power + 1e-9, "power rose at alpha {alpha}");
            prev_rate = rate;
            prev_power = pw;
        }
    }
}

//! File-transfer path selection (PSP-2): utility of aggregate rate traded
//! against energy per bit.

use crate::error::{Error, Result};

use super::{psp2_objective, result_from_rates, sorted_indices, Algorithm, Instance, SelectionResult};

/// Search limit for the exhaustive solver (each subset also needs a 1-D search).
pub const BRUTEFORCE_MAX_PATHS: usize = 8;

/// Prefix scan over the effective-cost ordering: prefix k runs its paths at
/// full capacity, scoring `U(C_k) - alpha_s * (sum z_i c_i) / C_k`.
///
/// Under condition C2 the optimum of PSP-2 has exactly this shape, so the
/// scan is exact; the sequence is not unimodal, so every k is checked.
pub fn solve_psp2(inst: &Instance) -> Result<SelectionResult> {
    inst.validate()?;
    let (best_k, best, order) = psp2_prefix_scan(inst);

    let mut warnings = Vec::new();
    if !inst.utility.satisfies_c2() {
        warnings.push(
            "utility violates C2 (x^2 U'(x) nondecreasing); prefix scan may be suboptimal".into(),
        );
    }

    let mut rates = vec![0.0; inst.paths.len()];
    for &i in order.iter().take(best_k) {
        rates[i] = inst.paths[i].c;
    }
    let objective = psp2_objective(&inst.paths, &rates, &inst.utility, inst.alpha_s);
    let upper_bound = if inst.utility.satisfies_c2() {
        best
    } else {
        f64::INFINITY
    };
    Ok(result_from_rates(
        inst,
        rates,
        objective,
        upper_bound,
        0.0,
        Algorithm::Psp2Scan,
        warnings,
    ))
}

/// Optimal value of the continuous relaxation of PSP-2 (`P_r` replaced by
/// `b'_r x_r`). Under C1 + C2 the relaxed optimum sits on a capacity prefix,
/// so it equals the scan maximum; it upper-bounds the PSP-2 optimum.
pub fn rpsp2_upper_bound(inst: &Instance) -> f64 {
    psp2_prefix_scan(inst).1
}

fn psp2_prefix_scan(inst: &Instance) -> (usize, f64, Vec<usize>) {
    let order = sorted_indices(&inst.paths, |p| p.b_prime());
    let u = &inst.utility;
    let mut cap = 0.0;
    let mut cost = 0.0;
    let mut best = f64::NEG_INFINITY;
    let mut best_k = 1;
    for (k, &i) in order.iter().enumerate() {
        let p = &inst.paths[i];
        cap += p.c;
        cost += p.b_prime() * p.c;
        let objective = u.eval(cap) - inst.alpha_s * cost / cap;
        if objective > best {
            best = objective;
            best_k = k + 1;
        }
    }
    (best_k, best, order)
}

/// Exhaustive PSP-2 oracle: every on-set, every choice of the single path
/// allowed below capacity, golden-section search on that path's rate.
/// Independent of the prefix scan.
pub fn solve_psp2_bruteforce(inst: &Instance) -> Result<SelectionResult> {
    inst.validate()?;
    let n = inst.paths.len();
    if n > BRUTEFORCE_MAX_PATHS {
        return Err(Error::Size {
            got: n,
            limit: BRUTEFORCE_MAX_PATHS,
        });
    }
    let u = &inst.utility;
    let alpha = inst.alpha_s;

    let mut best = f64::NEG_INFINITY;
    let mut best_rates = vec![0.0; n];
    let mut rates = vec![0.0; n];
    for mask in 1u32..(1 << n) {
        for partial in 0..n {
            if mask & (1 << partial) == 0 {
                continue;
            }
            // Everything else in the set at capacity.
            let mut base_cap = 0.0;
            let mut base_power = 0.0;
            for (i, (rate, p)) in rates.iter_mut().zip(&inst.paths).enumerate() {
                *rate = 0.0;
                if mask & (1 << i) != 0 && i != partial {
                    *rate = p.c;
                    base_cap += p.c;
                    base_power += p.b * p.c + p.theta;
                }
            }
            let p = &inst.paths[partial];
            let score = |x: f64| {
                u.eval(base_cap + x) - alpha * (base_power + p.b * x + p.theta) / (base_cap + x)
            };
            let (x, value) = maximize_1d(&score, p.c);
            if value > best {
                best = value;
                best_rates.copy_from_slice(&rates);
                best_rates[partial] = x;
            }
        }
    }

    let objective = psp2_objective(&inst.paths, &best_rates, u, alpha);
    let (upper_bound, warnings) = if inst.utility.satisfies_c2() {
        (rpsp2_upper_bound(inst), Vec::new())
    } else {
        (
            f64::INFINITY,
            vec!["utility violates C2; no relaxation bound reported".into()],
        )
    };
    Ok(result_from_rates(
        inst,
        best_rates,
        objective,
        upper_bound,
        0.0,
        Algorithm::Psp2BruteForce,
        warnings,
    ))
}

/// Maximize `f` over (0, hi]: a 33-point bracketing grid followed by
/// golden-section refinement to 1e-10 on the argument.
fn maximize_1d(f: &impl Fn(f64) -> f64, hi: f64) -> (f64, f64) {
    const GRID: usize = 33;
    let lo = hi * 1e-12;
    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    let point = |i: usize| {
        if i == 0 {
            lo
        } else {
            hi * i as f64 / (GRID - 1) as f64
        }
    };
    for i in 0..GRID {
        let v = f(point(i));
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let mut a = point(best_i.saturating_sub(1));
    let mut b = point((best_i + 1).min(GRID - 1));

    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > 1e-10 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
    }
    let mid = 0.5 * (a + b);
    let vm = f(mid);
    // Keep whichever of midpoint / best grid point / endpoint won.
    let vh = f(hi);
    let mut out = (mid, vm);
    if best_v > out.1 {
        out = (point(best_i), best_v);
    }
    if vh > out.1 {
        out = (hi, vh);
    }
    out
}

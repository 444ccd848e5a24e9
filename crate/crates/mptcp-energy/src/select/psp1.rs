//! Realtime path selection (PSP-1): utility of aggregate rate traded against
//! instantaneous power.

use crate::error::{Error, Result};
use super::{
    psp1_objective, result_from_rates, sorted_indices, Algorithm, Instance, SelectionResult,
};

/// Search limit for the exhaustive solver.
pub const BRUTEFORCE_MAX_PATHS: usize = 12;

/// One prefix of the greedy scan, in effective-cost order.
#[derive(Debug, Clone)]
pub struct PrefixEval {
    /// Original index of the k-th cheapest path.
    pub path_index: usize,
    /// Aggregate target `min{(U')^{-1}(alpha_s b_k), C_k}` before flooring.
    pub target: f64,
    /// Objective with the target as written, even when it falls below the
    /// capacity already committed to cheaper paths. This is the sequence the
    /// unimodality property speaks about.
    pub objective_raw: f64,
    /// Objective of the feasible interpretation: the aggregate floored at
    /// `C_{k-1}` so the k-th path never carries negative traffic.
    pub objective: f64,
}

/// The full greedy scan: paths in effective-cost (`b + theta/c`) order and
/// the per-prefix objectives.
#[derive(Debug, Clone)]
pub struct Psp1Scan {
    /// Original path indices, cheapest effective cost first (stable on ties).
    pub order: Vec<usize>,
    pub prefixes: Vec<PrefixEval>,
    /// 1-based prefix length maximizing the feasible objective.
    pub best_k: usize,
}

/// Evaluate every prefix of the effective-cost ordering.
///
/// For prefix length k the cheaper k-1 paths run at capacity and the target
/// aggregate is `min{(U')^{-1}(alpha_s b_k), C_k}`; the k-th path carries
/// whatever the target leaves beyond `C_{k-1}`.
pub fn psp1_scan(inst: &Instance) -> Psp1Scan {
    let order = sorted_indices(&inst.paths, |p| p.b_prime());
    let u = &inst.utility;
    let alpha = inst.alpha_s;

    let mut prefixes = Vec::with_capacity(order.len());
    let mut cap_before = 0.0; // C_{k-1}
    let mut cost_before = 0.0; // sum of z_i c_i over the full cheaper paths
    for &i in &order {
        let p = &inst.paths[i];
        let cap_through = cap_before + p.c;
        let target = u.deriv_inv(alpha * p.b).min(cap_through);
        let objective_raw =
            u.eval(target) - alpha * (cost_before + p.theta + p.b * (target - cap_before));
        let feasible = target.max(cap_before);
        let objective =
            u.eval(feasible) - alpha * (cost_before + p.theta + p.b * (feasible - cap_before));
        prefixes.push(PrefixEval {
            path_index: i,
            target,
            objective_raw,
            objective,
        });
        cap_before = cap_through;
        cost_before += p.b_prime() * p.c;
    }

    let mut best_k = 1;
    for k in 2..=prefixes.len() {
        if prefixes[k - 1].objective > prefixes[best_k - 1].objective {
            best_k = k;
        }
    }
    Psp1Scan {
        order,
        prefixes,
        best_k,
    }
}

/// Greedy PSP-1 solver: scan prefixes of the effective-cost ordering and keep
/// the best. Linear after the sort, and at most `alpha_s * theta` from the
/// optimum (see [`gap_certificate_psp1`]).
pub fn solve_psp1_greedy(inst: &Instance) -> Result<SelectionResult> {
    inst.validate()?;
    let scan = psp1_scan(inst);
    let n = inst.paths.len();

    let mut rates = vec![0.0; n];
    let mut cap_before = 0.0;
    for k in 1..scan.best_k {
        let i = scan.order[k - 1];
        rates[i] = inst.paths[i].c;
        cap_before += inst.paths[i].c;
    }
    let last = &scan.prefixes[scan.best_k - 1];
    let i = last.path_index;
    rates[i] = (last.target - cap_before).clamp(0.0, inst.paths[i].c);

    let mut objective = psp1_objective(&inst.paths, &rates, &inst.utility, inst.alpha_s);

    // A bounded-below utility admits the all-off allocation.
    let off = inst.utility.value_at_zero();
    if off.is_finite() && off > objective {
        rates = vec![0.0; n];
        objective = off;
    }

    let wf = rpsp1_waterfill(inst);
    let certificate = gap_certificate_psp1(inst, &wf);
    Ok(result_from_rates(
        inst,
        rates,
        objective,
        wf.bound,
        certificate,
        Algorithm::Psp1Greedy,
        Vec::new(),
    ))
}

/// Exact PSP-1 for two-path instances: with paths in marginal-power order,
/// the optimum is one of three candidate allocations (each path alone at its
/// unconstrained-or-capped rate, or the cheap path full and the dear path
/// carrying the remainder), plus all-off when the utility allows it.
pub fn solve_psp1_two_path(inst: &Instance) -> Result<SelectionResult> {
    inst.validate()?;
    if inst.paths.len() != 2 {
        return Err(Error::Arity {
            expected: 2,
            got: inst.paths.len(),
        });
    }
    let order = sorted_indices(&inst.paths, |p| p.b);
    let (lo, hi) = (order[0], order[1]);
    let u = &inst.utility;
    let alpha = inst.alpha_s;
    let (p_lo, p_hi) = (&inst.paths[lo], &inst.paths[hi]);

    let mut candidates: Vec<[f64; 2]> = Vec::with_capacity(4);
    // each path alone
    candidates.push(place(lo, u.deriv_inv(alpha * p_lo.b).min(p_lo.c), 0.0, hi));
    candidates.push(place(hi, u.deriv_inv(alpha * p_hi.b).min(p_hi.c), 0.0, lo));
    // cheap path full, dear path takes what the target leaves
    let spill = (u.deriv_inv(alpha * p_hi.b) - p_lo.c).clamp(0.0, p_hi.c);
    candidates.push(place(lo, p_lo.c, spill, hi));
    if u.value_at_zero().is_finite() {
        candidates.push([0.0, 0.0]);
    }

    let mut best_rates = [0.0; 2];
    let mut best = f64::NEG_INFINITY;
    for cand in candidates {
        let obj = psp1_objective(&inst.paths, &cand, u, alpha);
        if obj > best {
            best = obj;
            best_rates = cand;
        }
    }

    let wf = rpsp1_waterfill(inst);
    Ok(result_from_rates(
        inst,
        best_rates.to_vec(),
        best,
        wf.bound,
        0.0,
        Algorithm::Psp1TwoPath,
        Vec::new(),
    ))
}

fn place(at: usize, value: f64, other_value: f64, other: usize) -> [f64; 2] {
    let mut rates = [0.0; 2];
    rates[at] = value;
    rates[other] = other_value;
    rates
}

/// Exhaustive PSP-1 oracle: for every on-set, fill capacities in marginal-
/// power order until marginal utility meets `alpha_s b`, pay every member's
/// sunk cost, and keep the global best. Independent of the greedy code path.
pub fn solve_psp1_bruteforce(inst: &Instance) -> Result<SelectionResult> {
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
    let by_b = sorted_indices(&inst.paths, |p| p.b);

    let mut best = f64::NEG_INFINITY;
    let mut best_rates = vec![0.0; n];
    if u.value_at_zero().is_finite() {
        best = u.value_at_zero();
    }

    let mut rates = vec![0.0; n];
    for mask in 1u32..(1 << n) {
        rates.iter_mut().for_each(|x| *x = 0.0);
        let mut aggregate = 0.0;
        let mut marginal_cost = 0.0;
        let mut sunk = 0.0;
        for &i in &by_b {
            if mask & (1 << i) == 0 {
                continue;
            }
            let p = &inst.paths[i];
            sunk += p.theta;
            let fill = (u.deriv_inv(alpha * p.b) - aggregate).clamp(0.0, p.c);
            rates[i] = fill;
            aggregate += fill;
            marginal_cost += p.b * fill;
        }
        let utility = if aggregate > 0.0 {
            u.eval(aggregate)
        } else {
            u.value_at_zero()
        };
        let objective = utility - alpha * (marginal_cost + sunk);
        if objective > best {
            best = objective;
            best_rates.copy_from_slice(&rates);
        }
    }

    let objective = psp1_objective(&inst.paths, &best_rates, u, alpha);
    let wf = rpsp1_waterfill(inst);
    Ok(result_from_rates(
        inst,
        best_rates,
        objective,
        wf.bound,
        0.0,
        Algorithm::Psp1BruteForce,
        Vec::new(),
    ))
}

/// Water-filling solution of the continuous relaxation of PSP-1, where the
/// discontinuous `P_r` is replaced by `b'_r x_r`. Its value upper-bounds the
/// PSP-1 optimum.
#[derive(Debug, Clone)]
pub struct Rpsp1Waterfill {
    /// Relaxed rates, indexed like the instance paths.
    pub rates: Vec<f64>,
    /// Optimal value of the relaxation.
    pub bound: f64,
    /// The one path filled strictly between 0 and capacity, if any:
    /// (original index, 1-based position in effective-cost order).
    pub partial: Option<(usize, usize)>,
    /// Total capacity of the paths strictly cheaper than the partial one.
    pub cap_before_partial: f64,
}

/// Fill paths in effective-cost (`b' = b + theta/c`) order: each path gets
/// `clamp((U')^{-1}(alpha_s b'_k) - C_{k-1}, 0, c_k)`. Costs ranked by `b'`
/// make the targets nonincreasing, so the fill is a capacity prefix plus at
/// most one partial path.
pub fn rpsp1_waterfill(inst: &Instance) -> Rpsp1Waterfill {
    let order = sorted_indices(&inst.paths, |p| p.b_prime());
    let u = &inst.utility;
    let alpha = inst.alpha_s;

    let mut rates = vec![0.0; inst.paths.len()];
    let mut aggregate = 0.0;
    let mut relaxed_cost = 0.0;
    let mut partial = None;
    let mut cap_before_partial = 0.0;
    for (k, &i) in order.iter().enumerate() {
        let p = &inst.paths[i];
        let fill = (u.deriv_inv(alpha * p.b_prime()) - aggregate).clamp(0.0, p.c);
        if fill > 0.0 && fill < p.c {
            partial = Some((i, k + 1));
            cap_before_partial = aggregate;
        }
        rates[i] = fill;
        aggregate += fill;
        relaxed_cost += p.b_prime() * fill;
    }
    let bound = if aggregate > 0.0 {
        u.eval(aggregate) - alpha * relaxed_cost
    } else {
        u.value_at_zero()
    };
    Rpsp1Waterfill {
        rates,
        bound,
        partial,
        cap_before_partial,
    }
}

/// Closed-form bound on how far the greedy objective can sit below the PSP-1
/// optimum, derived from the water-filled relaxation. Zero when the fill
/// lands exactly on capacities; never more than `alpha_s * theta` of the
/// partially filled path.
pub fn gap_certificate_psp1(inst: &Instance, wf: &Rpsp1Waterfill) -> f64 {
    let (i, _k) = match wf.partial {
        Some(p) => p,
        None => return 0.0,
    };
    let p = &inst.paths[i];
    let x_hat = wf.rates[i];
    let alpha = inst.alpha_s;

    let sunk_bound = alpha * p.theta * (1.0 - x_hat / p.c);

    let u_prime = if wf.cap_before_partial > 0.0 {
        inst.utility.deriv(wf.cap_before_partial)
    } else {
        inst.utility.deriv_at_zero()
    };
    let chord_bound = if u_prime.is_finite() {
        0.5 * x_hat * (u_prime - alpha * p.b_prime())
    } else {
        f64::INFINITY
    };

    sunk_bound.min(chord_bound).max(0.0)
}

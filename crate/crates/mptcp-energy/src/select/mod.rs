//! Path selection for energy-aware multipath connections.
//!
//! Two problem flavours are solved over the same instance data:
//!
//! * **PSP-1** (realtime traffic): maximize `U(sum x) - alpha_s * sum P_r(x_r)`
//!   subject to per-path capacities. Instantaneous power is what matters when
//!   the transfer duration is fixed. Solved by a linear-time greedy scan with
//!   a suboptimality certificate ([`psp1`]), an exact two-path solver, and an
//!   exhaustive oracle.
//! * **PSP-2** (file transfer): maximize `U(sum x) - alpha_s * E(x)` where
//!   `E` is energy per bit. When the duration scales with 1/rate, energy --
//!   not power -- is the right cost. Solved exactly by a prefix scan under
//!   condition C2 ([`psp2`]), with an exhaustive oracle.
//!
//! Both problems are nonconvex because switching a path on costs its sunk
//! power; the solvers own that on/off discontinuity so the congestion
//! controller downstream never sees it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::energy::power_unchecked;
use crate::error::{Error, Result};
use crate::path::{PathSpec, RateVector};
use crate::utility::UtilityFunction;

pub mod psp1;
pub mod psp2;

pub use psp1::{
    gap_certificate_psp1, rpsp1_waterfill, solve_psp1_bruteforce, solve_psp1_greedy,
    solve_psp1_two_path, Psp1Scan, Rpsp1Waterfill,
};
pub use psp2::{rpsp2_upper_bound, solve_psp2, solve_psp2_bruteforce};

/// One path-selection problem instance: the candidate paths, the utility of
/// aggregate rate, and the tradeoff weight `alpha_s` (utility units per mW).
#[derive(Debug, Clone)]
pub struct Instance {
    pub paths: Vec<PathSpec>,
    pub utility: UtilityFunction,
    pub alpha_s: f64,
    /// Number of identical connections sharing this selection (default 1).
    pub n_connections: u32,
}

impl Instance {
    pub fn new(paths: Vec<PathSpec>, utility: UtilityFunction, alpha_s: f64) -> Result<Self> {
        let inst = Instance {
            paths,
            utility,
            alpha_s,
            n_connections: 1,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths.is_empty() {
            return Err(Error::Domain("instance needs at least one path".into()));
        }
        for p in &self.paths {
            p.validate()?;
        }
        for (i, p) in self.paths.iter().enumerate() {
            if self.paths[..i].iter().any(|q| q.id == p.id) {
                return Err(Error::Domain(format!("duplicate path id `{}`", p.id)));
            }
        }
        if !(self.alpha_s >= 0.0 && self.alpha_s.is_finite()) {
            return Err(Error::Domain("alpha_s must be finite and >= 0".into()));
        }
        if !self.utility.satisfies_c1() {
            return Err(Error::Domain("utility must be concave increasing (C1)".into()));
        }
        if self.n_connections < 1 {
            return Err(Error::Domain("n_connections must be >= 1".into()));
        }
        Ok(())
    }

    /// Fold `n_connections` identical connections into one instance: each
    /// connection sees `c_r / N` of every access link, and the pooled
    /// objective scales the utility by `N`. Selection then runs unchanged.
    pub fn scale_for_n_connections(&self) -> Instance {
        let n = self.n_connections.max(1) as f64;
        if self.n_connections <= 1 {
            return self.clone();
        }
        let paths = self
            .paths
            .iter()
            .map(|p| PathSpec {
                id: p.id.clone(),
                b: p.b,
                theta: p.theta,
                c: p.c / n,
            })
            .collect();
        Instance {
            paths,
            utility: self.utility.scaled(n),
            alpha_s: self.alpha_s,
            n_connections: 1,
        }
    }
}

/// Which solver produced a [`SelectionResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Psp1Greedy,
    Psp1TwoPath,
    Psp1BruteForce,
    Psp2Scan,
    Psp2BruteForce,
}

/// A solved selection: the on-set, per-path rates, the achieved objective,
/// a relaxation upper bound on the optimum, and a suboptimality certificate
/// (`optimum - objective <= gap_certificate`).
#[derive(Debug, Clone, Serialize)]
pub struct SelectionResult {
    pub chosen: Vec<String>,
    pub rates: RateVector,
    pub objective: f64,
    pub upper_bound: f64,
    pub gap_certificate: f64,
    pub algorithm: Algorithm,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl SelectionResult {
    pub fn aggregate_rate(&self) -> f64 {
        self.rates.aggregate()
    }

    /// Total power of the reported rates, off paths contributing zero.
    pub fn total_power(&self, paths: &[PathSpec]) -> f64 {
        paths
            .iter()
            .map(|p| power_unchecked(p, self.rates.get(&p.id).unwrap_or(0.0)))
            .sum()
    }
}

/// True PSP-1 objective of a feasible per-path rate allocation; a path with
/// zero rate is off and pays nothing.
pub(crate) fn psp1_objective(
    paths: &[PathSpec],
    rates: &[f64],
    utility: &UtilityFunction,
    alpha_s: f64,
) -> f64 {
    let aggregate: f64 = rates.iter().sum();
    let u = if aggregate > 0.0 {
        utility.eval(aggregate)
    } else {
        utility.value_at_zero()
    };
    let power: f64 = paths
        .iter()
        .zip(rates)
        .map(|(p, &x)| power_unchecked(p, x))
        .sum();
    u - alpha_s * power
}

/// True PSP-2 objective; undefined (-inf) when nothing is sent.
pub(crate) fn psp2_objective(
    paths: &[PathSpec],
    rates: &[f64],
    utility: &UtilityFunction,
    alpha_s: f64,
) -> f64 {
    let aggregate: f64 = rates.iter().sum();
    if aggregate <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let power: f64 = paths
        .iter()
        .zip(rates)
        .map(|(p, &x)| power_unchecked(p, x))
        .sum();
    utility.eval(aggregate) - alpha_s * power / aggregate
}

pub(crate) fn result_from_rates(
    inst: &Instance,
    rates: Vec<f64>,
    objective: f64,
    upper_bound: f64,
    gap_certificate: f64,
    algorithm: Algorithm,
    warnings: Vec<String>,
) -> SelectionResult {
    let chosen = inst
        .paths
        .iter()
        .zip(&rates)
        .filter(|(_, &x)| x > 0.0)
        .map(|(p, _)| p.id.clone())
        .collect();
    let rates = RateVector::from_pairs(
        inst.paths
            .iter()
            .zip(&rates)
            .map(|(p, &x)| (p.id.clone(), x))
            .collect(),
    );
    SelectionResult {
        chosen,
        rates,
        objective,
        upper_bound,
        gap_certificate,
        algorithm,
        warnings,
    }
}

/// Indices of `paths` sorted ascending by `key`, ties kept in input order.
pub(crate) fn sorted_indices(paths: &[PathSpec], key: impl Fn(&PathSpec) -> f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..paths.len()).collect();
    idx.sort_by(|&a, &b| key(&paths[a]).partial_cmp(&key(&paths[b])).unwrap());
    idx
}

/// Deterministic random instance for property suites and the CLI's seeded
/// mode: 1..=max_paths paths with b, theta, c ~ U[0.1, 10] and
/// alpha_s ~ U[0, 5]. The utility is drawn from the C2-satisfying kinds.
pub fn sample_instance(seed: u64, max_paths: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_paths.max(1));
    let paths = sample_paths(&mut rng, n);
    let utility = match rng.gen_range(0..3) {
        0 => UtilityFunction::log(rng.gen_range(0.2..5.0)).unwrap(),
        1 => UtilityFunction::alpha_fair(rng.gen_range(0.0..2.0), rng.gen_range(0.2..5.0)).unwrap(),
        _ => UtilityFunction::new_reno(rng.gen_range(0.05..0.3)).unwrap(),
    };
    let alpha_s = rng.gen_range(0.0..5.0);
    Instance::new(paths, utility, alpha_s).unwrap()
}

/// Like [`sample_instance`] but always alpha-fair with alpha in [0, 2],
/// the regime where the PSP-2 scan is provably exact.
pub fn sample_instance_alpha_fair(seed: u64, max_paths: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_paths.max(1));
    let paths = sample_paths(&mut rng, n);
    let utility =
        UtilityFunction::alpha_fair(rng.gen_range(0.0..=2.0), rng.gen_range(0.2..5.0)).unwrap();
    let alpha_s = rng.gen_range(0.0..5.0);
    Instance::new(paths, utility, alpha_s).unwrap()
}

fn sample_paths(rng: &mut ChaCha8Rng, n: usize) -> Vec<PathSpec> {
    (0..n)
        .map(|i| {
            PathSpec::new(
                format!("p{i}"),
                rng.gen_range(0.1..10.0),
                rng.gen_range(0.1..10.0),
                rng.gen_range(0.1..10.0),
            )
            .unwrap()
        })
        .collect()
}

//! Utility functions used by TCP rate control.
//!
//! All supported utilities are concave and increasing on (0, inf) (condition
//! C1). Condition C2 — `x^2 U'(x)` nondecreasing — is what guarantees exact
//! file-transfer path selection; the alpha-fair family satisfies it exactly
//! for `alpha <= 2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A concave increasing utility of the aggregate rate (Mbps).
///
/// `NewReno { tau }` is the loss-based TCP utility `-2 / (tau^2 x)` with
/// round-trip time `tau` in seconds; it is the alpha-fair function with
/// `alpha = 2, gamma = 2 / tau^2`. `Log` is alpha-fair with `alpha = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UtilityFunction {
    AlphaFair { alpha: f64, gamma: f64 },
    NewReno { tau: f64 },
    Log { gamma: f64 },
}

impl UtilityFunction {
    pub fn alpha_fair(alpha: f64, gamma: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::Domain("alpha-fair: alpha must be >= 0".into()));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Domain("alpha-fair: gamma must be > 0".into()));
        }
        Ok(UtilityFunction::AlphaFair { alpha, gamma })
    }

    pub fn new_reno(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Domain("newreno: tau must be > 0 seconds".into()));
        }
        Ok(UtilityFunction::NewReno { tau })
    }

    pub fn log(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Domain("log: gamma must be > 0".into()));
        }
        Ok(UtilityFunction::Log { gamma })
    }

    /// The (alpha, gamma) pair of the equivalent alpha-fair function.
    fn as_alpha_fair(&self) -> (f64, f64) {
        match *self {
            UtilityFunction::AlphaFair { alpha, gamma } => (alpha, gamma),
            UtilityFunction::NewReno { tau } => (2.0, 2.0 / (tau * tau)),
            UtilityFunction::Log { gamma } => (1.0, gamma),
        }
    }

    /// U(x) for x > 0; at x = 0 the continuous limit is returned
    /// (0 for alpha < 1, -inf otherwise).
    pub fn eval(&self, x: f64) -> f64 {
        debug_assert!(x >= 0.0, "utility evaluated at negative rate");
        let (alpha, gamma) = self.as_alpha_fair();
        if (alpha - 1.0).abs() < 1e-12 {
            gamma * x.ln()
        } else {
            gamma * x.powf(1.0 - alpha) / (1.0 - alpha)
        }
    }

    /// Marginal utility U'(x) = gamma * x^(-alpha) for x > 0; the limit at
    /// x = 0 is +inf except for the linear case alpha = 0.
    pub fn deriv(&self, x: f64) -> f64 {
        debug_assert!(x >= 0.0, "utility derivative at negative rate");
        let (alpha, gamma) = self.as_alpha_fair();
        if alpha == 0.0 {
            gamma
        } else {
            gamma * x.powf(-alpha)
        }
    }

    /// Second derivative, <= 0 everywhere on (0, inf).
    pub fn second_deriv(&self, x: f64) -> f64 {
        let (alpha, gamma) = self.as_alpha_fair();
        -alpha * gamma * x.powf(-alpha - 1.0)
    }

    /// Unique x with U'(x) = m.
    ///
    /// For m <= 0 (or m below the infimum of U') there is no finite solution
    /// and +inf is returned; downstream capacity clamps make that the right
    /// sentinel. For the linear utility, marginal cost above gamma returns 0.
    pub fn deriv_inv(&self, m: f64) -> f64 {
        let (alpha, gamma) = self.as_alpha_fair();
        if m <= 0.0 {
            return f64::INFINITY;
        }
        if alpha == 0.0 {
            return if m > gamma { 0.0 } else { f64::INFINITY };
        }
        (gamma / m).powf(1.0 / alpha)
    }

    /// Continuous limit of U at 0: finite (0) only when alpha < 1.
    pub fn value_at_zero(&self) -> f64 {
        let (alpha, _) = self.as_alpha_fair();
        if alpha < 1.0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Limit of U' at 0+: gamma for the linear case, +inf otherwise.
    pub fn deriv_at_zero(&self) -> f64 {
        let (alpha, gamma) = self.as_alpha_fair();
        if alpha == 0.0 {
            gamma
        } else {
            f64::INFINITY
        }
    }

    /// Condition C1: concave and increasing on (0, inf). All representable
    /// utilities satisfy this; concavity is strict except for alpha = 0.
    pub fn satisfies_c1(&self) -> bool {
        let (alpha, gamma) = self.as_alpha_fair();
        alpha >= 0.0 && gamma > 0.0
    }

    /// Condition C2: `x^2 U'(x)` nondecreasing. For the alpha-fair family
    /// `x^2 U'(x) = gamma x^(2 - alpha)`, so this holds exactly iff
    /// alpha <= 2.
    pub fn satisfies_c2(&self) -> bool {
        let (alpha, _) = self.as_alpha_fair();
        alpha <= 2.0
    }

    /// Same utility scaled by a positive factor (used when one selection is
    /// shared by several identical connections).
    pub fn scaled(&self, factor: f64) -> UtilityFunction {
        debug_assert!(factor > 0.0);
        match *self {
            UtilityFunction::AlphaFair { alpha, gamma } => UtilityFunction::AlphaFair {
                alpha,
                gamma: factor * gamma,
            },
            UtilityFunction::Log { gamma } => UtilityFunction::Log {
                gamma: factor * gamma,
            },
            UtilityFunction::NewReno { tau } => UtilityFunction::AlphaFair {
                alpha: 2.0,
                gamma: factor * 2.0 / (tau * tau),
            },
        }
    }
}

/// Grid check of C2 on 1000 log-spaced points over [1e-6, 1e6]; the analytic
/// answer in [`UtilityFunction::satisfies_c2`] is authoritative, this is the
/// independent numeric route.
pub fn c2_grid_check(u: &UtilityFunction) -> bool {
    let n = 1000;
    let (lo, hi) = (1e-6_f64, 1e6_f64);
    let mut prev = f64::NEG_INFINITY;
    for i in 0..n {
        let t = i as f64 / (n - 1) as f64;
        let x = lo * (hi / lo).powf(t);
        let g = x * x * u.deriv(x);
        if g < prev * (1.0 - 1e-9) - 1e-12 {
            return false;
        }
        prev = g;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent oracle: bracketed bisection on U' with bracket doubling.
    fn deriv_inv_bisect(u: &UtilityFunction, m: f64) -> f64 {
        let (mut lo, mut hi) = (1e-9_f64, 1e6_f64);
        assert!(u.deriv(lo) > m && u.deriv(hi) < m, "bracket must straddle m");
        while (hi - lo) / hi > 1e-14 {
            let mid = 0.5 * (lo + hi);
            if u.deriv(mid) > m {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn log_deriv_inv_closed_form() {
        let u = UtilityFunction::log(1.0).unwrap();
        assert!((u.deriv_inv(0.5) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn newreno_matches_alpha_fair_two() {
        let tau = 0.1;
        let u = UtilityFunction::new_reno(tau).unwrap();
        let af = UtilityFunction::alpha_fair(2.0, 2.0 / (tau * tau)).unwrap();
        for &x in &[0.1, 1.0, 3.7, 12.74] {
            assert!((u.eval(x) - af.eval(x)).abs() < 1e-9);
            assert!((u.deriv(x) - af.deriv(x)).abs() < 1e-9);
        }
        // U'(x) = 200 / x^2 at tau = 0.1, so deriv_inv(200) = 1.
        assert!((u.deriv_inv(200.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deriv_inv_agrees_with_bisection() {
        let u = UtilityFunction::alpha_fair(1.5, 1.0).unwrap();
        for i in 0..50 {
            let m = 1e-3 * (1e6_f64).powf(i as f64 / 49.0);
            let direct = u.deriv_inv(m);
            let oracle = deriv_inv_bisect(&u, m);
            assert!(
                (direct - oracle).abs() <= 1e-10 * oracle.max(1.0),
                "m={m}: {direct} vs {oracle}"
            );
        }
    }

    #[test]
    fn c2_analytic_matches_grid() {
        let cases = [
            (UtilityFunction::alpha_fair(2.0, 1.0).unwrap(), true),
            (UtilityFunction::alpha_fair(2.5, 1.0).unwrap(), false),
            (UtilityFunction::alpha_fair(0.5, 3.0).unwrap(), true),
            (UtilityFunction::log(1.0).unwrap(), true),
            (UtilityFunction::new_reno(0.1).unwrap(), true),
        ];
        for (u, expected) in cases {
            assert_eq!(u.satisfies_c2(), expected, "{u:?}");
            assert_eq!(c2_grid_check(&u), expected, "grid check {u:?}");
        }
    }

    #[test]
    fn c1_grid_holds_for_supported_kinds() {
        let kinds = [
            UtilityFunction::alpha_fair(0.5, 2.0).unwrap(),
            UtilityFunction::alpha_fair(1.5, 0.7).unwrap(),
            UtilityFunction::alpha_fair(2.0, 1.0).unwrap(),
            UtilityFunction::log(1.0).unwrap(),
            UtilityFunction::new_reno(0.1).unwrap(),
        ];
        for u in kinds {
            for i in 0..100 {
                let x = 1e-4 * (1e8_f64).powf(i as f64 / 99.0);
                assert!(u.deriv(x) > 0.0, "{u:?} U' <= 0 at {x}");
                assert!(u.second_deriv(x) < 0.0, "{u:?} U'' >= 0 at {x}");
            }
        }
    }

    #[test]
    fn scaled_doubles_value_and_derivative() {
        let u = UtilityFunction::new_reno(0.1).unwrap();
        let s = u.scaled(2.0);
        for &x in &[0.5, 2.0, 9.0] {
            assert!((s.eval(x) - 2.0 * u.eval(x)).abs() < 1e-9);
            assert!((s.deriv(x) - 2.0 * u.deriv(x)).abs() < 1e-9);
        }
        // (N U)'^{-1}(m) = U'^{-1}(m / N)
        assert!((s.deriv_inv(10.0) - u.deriv_inv(5.0)).abs() < 1e-12);
    }

    #[test]
    fn zero_limits() {
        assert_eq!(
            UtilityFunction::alpha_fair(0.5, 1.0).unwrap().value_at_zero(),
            0.0
        );
        assert_eq!(
            UtilityFunction::log(1.0).unwrap().value_at_zero(),
            f64::NEG_INFINITY
        );
        assert_eq!(
            UtilityFunction::new_reno(0.2).unwrap().value_at_zero(),
            f64::NEG_INFINITY
        );
        assert_eq!(
            UtilityFunction::alpha_fair(0.0, 3.0).unwrap().deriv_at_zero(),
            3.0
        );
    }
}

//! Power and energy-per-bit formulas shared by path selection and the
//! fluid simulator.

use crate::error::{Error, Result};
use crate::path::{PathSpec, RateVector};

/// Instantaneous power of one path at rate `x` Mbps.
///
/// The interface draws `b x + theta` mW while active and exactly 0 when off;
/// the jump at `x = 0` is deliberate and never smoothed. Rates outside
/// `[0, c]` are a domain error.
pub fn power(path: &PathSpec, x: f64) -> Result<f64> {
    if !(0.0..=path.c).contains(&x) {
        return Err(Error::Domain(format!(
            "rate {x} Mbps outside [0, {}] on path `{}`",
            path.c, path.id
        )));
    }
    Ok(power_unchecked(path, x))
}

/// `power` without the range check, for solver and simulator hot loops that
/// already maintain feasibility.
#[inline]
pub fn power_unchecked(path: &PathSpec, x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        path.b * x + path.theta
    }
}

/// Energy per bit of a rate allocation: total power over aggregate rate,
/// in mJ/Mb (identically mW/Mbps).
pub fn energy_per_bit(paths: &[PathSpec], rates: &RateVector) -> Result<f64> {
    let aggregate = rates.aggregate();
    if aggregate <= 0.0 {
        return Err(Error::UndefinedRatio);
    }
    let mut total = 0.0;
    for path in paths {
        let x = rates.get(&path.id).unwrap_or(0.0);
        total += power(path, x)?;
    }
    Ok(total / aggregate)
}

/// Partial derivative of energy per bit with respect to one path's rate,
/// on a fixed on-set where every listed path pays its sunk power:
/// `dE/dx_r = b_r / X - sum(P) / X^2` with `X` the aggregate rate.
pub fn energy_per_bit_grad(b_r: f64, aggregate: f64, total_power: f64) -> f64 {
    b_r / aggregate - total_power / (aggregate * aggregate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_examples() {
        let wifi = PathSpec::wifi();
        let lte = PathSpec::lte();
        assert_eq!(power(&wifi, 0.0).unwrap(), 0.0);
        assert!((power(&wifi, 4.12).unwrap() - 1114.284).abs() < 1e-9);
        assert!((power(&lte, 10.0).unwrap() - 1808.0).abs() < 1e-9);
    }

    #[test]
    fn power_domain_errors() {
        let wifi = PathSpec::wifi();
        assert!(power(&wifi, -0.1).is_err());
        assert!(power(&wifi, 4.13).is_err());
    }

    #[test]
    fn energy_per_bit_bottleneck_splits() {
        let paths = [PathSpec::wifi(), PathSpec::lte()];
        // Regular multipath split on a 10 Mbps bottleneck.
        let both = RateVector::from_pairs(vec![("wifi".into(), 4.12), ("lte".into(), 5.88)]);
        assert!((energy_per_bit(&paths, &both).unwrap() - 270.8044).abs() < 1e-9);
        // LTE alone at 10 Mbps.
        let lte_only = RateVector::from_pairs(vec![("lte".into(), 10.0)]);
        assert!((energy_per_bit(&paths, &lte_only).unwrap() - 180.8).abs() < 1e-9);
        // LTE at 10 Mbps with WiFi on but idle: the sunk cost alone is paid.
        // (1808 + 132.9) / 10 = 194.09; approximated with a vanishing rate.
        let wifi_idle =
            RateVector::from_pairs(vec![("lte".into(), 10.0 - 1e-9), ("wifi".into(), 1e-9)]);
        assert!((energy_per_bit(&paths, &wifi_idle).unwrap() - 194.09).abs() < 1e-6);
    }

    #[test]
    fn energy_per_bit_undefined_at_zero() {
        let paths = [PathSpec::wifi()];
        let rates = RateVector::from_pairs(vec![("wifi".into(), 0.0)]);
        assert!(matches!(
            energy_per_bit(&paths, &rates),
            Err(Error::UndefinedRatio)
        ));
    }

    #[test]
    fn single_path_full_capacity_equals_b_prime() {
        let lte = PathSpec::lte();
        let rates = RateVector::from_pairs(vec![("lte".into(), lte.c)]);
        let e = energy_per_bit(std::slice::from_ref(&lte), &rates).unwrap();
        assert!((e - lte.b_prime()).abs() < 1e-12);
    }

    #[test]
    fn average_power_strictly_decreasing_when_sunk_cost_positive() {
        let wifi = PathSpec::wifi();
        let mut prev = f64::INFINITY;
        for i in 1..=100 {
            let x = wifi.c * i as f64 / 100.0;
            let avg = power(&wifi, x).unwrap() / x;
            assert!(avg < prev);
            prev = avg;
        }
    }
}

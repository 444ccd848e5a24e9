//! Rate drivers, regulation, and gains of the fluid controllers.

use crate::energy::energy_per_bit_grad;
use crate::utility::UtilityFunction;

use super::ControllerKind;

/// Regulation multiplier `f_r = beta |x|_inf / x_r + 1 - beta`.
///
/// Couples the subflows of one source: the largest subflow sees exactly 1,
/// smaller ones see more, and the value never drops below `1 - beta`. It
/// makes the controller responsive (and, for the energy-per-bit driver,
/// provably stable) at some cost in friendliness to single-path flows.
pub fn regulation(beta: f64, x_r: f64, x_max: f64) -> f64 {
    beta * x_max / x_r + 1.0 - beta
}

/// Rate-adaptation gain `k_r = x_r (x_r + |x|_inf) / 2`.
pub fn gain(x_r: f64, x_max: f64) -> f64 {
    0.5 * x_r * (x_r + x_max)
}

/// The rate driver `phi_r`; the route moves as `k_r (phi_r - q_r)`.
///
/// * single-path: `U'(x_r)`;
/// * regular multipath: `f_r U'(X)`;
/// * energy-aware realtime: `f_r U'(X) - alpha_s b_r` (the marginal-power
///   weight drops to plain `-b_r` when `weight_alpha` is off);
/// * energy-aware file transfer: `f_r U'(X) - alpha_s dE/dx_r`, with
///   `dE/dx_r = b_r / X - P / X^2` on the selected on-set.
///
/// `aggregate` is the source's total rate `X`, `total_power` the power of
/// its on-set (sunk costs included), `x_max` its largest subflow rate.
#[allow(clippy::too_many_arguments)]
pub fn phi(
    controller: ControllerKind,
    utility: &UtilityFunction,
    alpha_s: f64,
    beta: f64,
    weight_alpha: bool,
    b_r: f64,
    x_r: f64,
    x_max: f64,
    aggregate: f64,
    total_power: f64,
) -> f64 {
    match controller {
        ControllerKind::SinglePath => utility.deriv(x_r),
        ControllerKind::RegularMptcp => {
            regulation(beta, x_r, x_max) * utility.deriv(aggregate)
        }
        ControllerKind::EeRealtime => {
            let weight = if weight_alpha { alpha_s } else { 1.0 };
            regulation(beta, x_r, x_max) * utility.deriv(aggregate) - weight * b_r
        }
        ControllerKind::EeFileTransfer => {
            regulation(beta, x_r, x_max) * utility.deriv(aggregate)
                - alpha_s * energy_per_bit_grad(b_r, aggregate, total_power)
        }
    }
}

//! Energy-aware multipath TCP: path selection and fluid-model congestion
//! control for multi-homed devices.
//!
//! A device with several radio interfaces (say WiFi and 4G/LTE) can stripe
//! one TCP connection across all of them. Each interface draws `b x + theta`
//! milliwatts at rate `x` Mbps -- a marginal cost plus a sunk cost for being
//! on at all -- so the throughput-maximal schedule is rarely the
//! energy-minimal one. This crate provides:
//!
//! * the shared power/energy model and the utility functions of classic TCP
//!   rate control ([`energy`], [`utility`]);
//! * solvers for the two path-selection problems, realtime (instantaneous
//!   power) and file transfer (energy per bit), with relaxation bounds,
//!   suboptimality certificates, and exhaustive oracles ([`select`]);
//! * a deterministic primal-dual fluid simulator of the resulting multipath
//!   congestion controllers over a capacitated network ([`sim`]);
//! * prebuilt experiments sweeping the throughput/energy tradeoff
//!   ([`experiments`]) and a JSON scenario format ([`scenario`]).
//!
//! The companion `mptcp-energy-cli` crate exposes all of it on the command
//! line; the `book/` directory holds a guide whose examples double as this
//! workspace's doc-tests.

pub mod energy;
pub mod error;
pub mod experiments;
pub mod path;
pub mod scenario;
pub mod select;
pub mod sim;
pub mod utility;

pub use error::{Error, Result};
pub use path::{PathSpec, RateVector};
pub use select::{Instance, SelectionResult};
pub use utility::UtilityFunction;

/// Format a float with six significant digits, the fixed precision used for
/// all CLI and CSV output so identical runs emit identical bytes.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exponent = x.abs().log10().floor() as i32;
    if (-4..15).contains(&exponent) {
        let decimals = (5 - exponent).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let trimmed = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.')
        } else {
            &s
        };
        trimmed.to_string()
    } else {
        format!("{x:.5e}")
    }
}

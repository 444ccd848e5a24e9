//! Primal-dual fluid model of multipath congestion control.
//!
//! Rates and link prices evolve continuously: every route adapts
//! `dx_r/dt = k_r (phi_r - q_r)` against the sum `q_r` of prices on its
//! links, and every link integrates its excess load `dp_l/dt =
//! gamma_l (y_l - c_l)`, both with positive projections. The controller
//! family differs only in the rate driver `phi_r`; see [`dynamics`].
//!
//! Path selection runs once per source before integration starts, so the
//! on/off power discontinuity never enters the dynamics. The integrator is
//! explicit Euler with a fixed step: runs are bit-reproducible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::PathSpec;
use crate::select::{
    solve_psp1_bruteforce, solve_psp1_greedy, solve_psp1_two_path, solve_psp2, Instance,
    SelectionResult,
};
use crate::utility::UtilityFunction;

pub mod dynamics;
pub mod run;

pub use run::{run, Metrics, RunOutput, SimState, Simulation, SourceMetrics, TerminationEvent, Trace};

/// A capacitated network link with its price gain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Link {
    pub id: String,
    /// Capacity, Mbps.
    pub capacity: f64,
    /// Price integration gain, 1/(Mbps*s).
    pub price_gain: f64,
}

impl Link {
    /// Default gain 0.1 / capacity: price relaxation takes the same time
    /// scale on every link regardless of its size.
    pub fn new(id: impl Into<String>, capacity: f64) -> Self {
        Link {
            id: id.into(),
            capacity,
            price_gain: 0.1 / capacity,
        }
    }

    pub fn with_gain(mut self, price_gain: f64) -> Self {
        self.price_gain = price_gain;
        self
    }
}

/// One path of a multipath source: the links it crosses plus the power
/// characteristics of its first-hop interface.
#[derive(Debug, Clone)]
pub struct Route {
    pub id: String,
    /// Indices into [`Scenario::links`], access link first.
    pub links: Vec<usize>,
    /// Power/capacity triple of the access interface.
    pub path: PathSpec,
}

/// Rate-control algorithm run by a source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    /// Plain single-path TCP: `phi = U'(x_r)`.
    SinglePath,
    /// Coupled multipath without any energy term (the `alpha_s = 0` case).
    RegularMptcp,
    /// Energy-aware realtime: marginal power enters the driver.
    EeRealtime,
    /// Energy-aware file transfer: the energy-per-bit gradient enters.
    EeFileTransfer,
}

/// What the source is carrying, and hence when it stops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AppKind {
    /// Fixed duration in seconds (streaming, calls).
    Realtime { duration: f64 },
    /// Fixed size in Mbit (downloads); completes when fully transferred.
    FileTransfer { size: f64 },
}

/// How the on-set of routes is decided before integration.
#[derive(Debug, Clone, PartialEq)]
pub enum SelectionPolicy {
    /// Solve the controller's own selection problem on the source's paths.
    Auto,
    /// Force exactly these route ids on (selection made elsewhere, e.g.
    /// shared across several connections of one device).
    Fixed(Vec<String>),
}

/// A traffic source: a set of candidate routes, a controller, and an app.
#[derive(Debug, Clone)]
pub struct Source {
    pub id: String,
    /// Indices into [`Scenario::routes`].
    pub routes: Vec<usize>,
    pub controller: ControllerKind,
    pub utility: UtilityFunction,
    /// Energy tradeoff weight (ignored by the non-EE controllers).
    pub alpha_s: f64,
    /// Regulation weight in [0, 1]; 0.2 is the usual choice, larger is more
    /// responsive but less friendly to single-path flows.
    pub beta: f64,
    pub app: AppKind,
    pub selection: SelectionPolicy,
}

/// A complete simulation input: links, routes, sources.
#[derive(Debug, Clone, Default)]
pub struct Scenario {
    pub links: Vec<Link>,
    pub routes: Vec<Route>,
    pub sources: Vec<Source>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        for (name, ids) in [
            ("link", self.links.iter().map(|l| &l.id).collect::<Vec<_>>()),
            ("route", self.routes.iter().map(|r| &r.id).collect()),
            ("source", self.sources.iter().map(|s| &s.id).collect()),
        ] {
            for (i, id) in ids.iter().enumerate() {
                if ids[..i].contains(id) {
                    return Err(Error::Scenario(format!("duplicate {name} id `{id}`")));
                }
            }
        }
        for link in &self.links {
            if !(link.capacity > 0.0 && link.capacity.is_finite()) {
                return Err(Error::Scenario(format!(
                    "link `{}`: capacity must be > 0",
                    link.id
                )));
            }
            if !(link.price_gain > 0.0 && link.price_gain.is_finite()) {
                return Err(Error::Scenario(format!(
                    "link `{}`: price gain must be > 0",
                    link.id
                )));
            }
        }
        for route in &self.routes {
            if route.links.is_empty() {
                return Err(Error::Scenario(format!(
                    "route `{}` crosses no links",
                    route.id
                )));
            }
            for &l in &route.links {
                if l >= self.links.len() {
                    return Err(Error::Scenario(format!(
                        "route `{}` references missing link #{l}",
                        route.id
                    )));
                }
            }
            route.path.validate()?;
        }
        let mut route_owner: Vec<Option<usize>> = vec![None; self.routes.len()];
        for (si, source) in self.sources.iter().enumerate() {
            if source.routes.is_empty() {
                return Err(Error::Scenario(format!(
                    "source `{}` has no routes",
                    source.id
                )));
            }
            if source.controller == ControllerKind::SinglePath && source.routes.len() != 1 {
                return Err(Error::Scenario(format!(
                    "source `{}`: single-path controller needs exactly one route",
                    source.id
                )));
            }
            if !(0.0..=1.0).contains(&source.beta) {
                return Err(Error::Scenario(format!(
                    "source `{}`: beta must lie in [0, 1]",
                    source.id
                )));
            }
            if !(source.alpha_s >= 0.0 && source.alpha_s.is_finite()) {
                return Err(Error::Scenario(format!(
                    "source `{}`: alpha_s must be >= 0",
                    source.id
                )));
            }
            if !source.utility.satisfies_c1() {
                return Err(Error::Scenario(format!(
                    "source `{}`: utility must satisfy C1",
                    source.id
                )));
            }
            match source.app {
                AppKind::Realtime { duration } => {
                    if duration <= 0.0 || duration.is_nan() {
                        return Err(Error::Scenario(format!(
                            "source `{}`: duration must be > 0",
                            source.id
                        )));
                    }
                }
                AppKind::FileTransfer { size } => {
                    if size <= 0.0 || size.is_nan() {
                        return Err(Error::Scenario(format!(
                            "source `{}`: file size must be > 0",
                            source.id
                        )));
                    }
                }
            }
            for &r in &source.routes {
                if r >= self.routes.len() {
                    return Err(Error::Scenario(format!(
                        "source `{}` references missing route #{r}",
                        source.id
                    )));
                }
                if route_owner[r].is_some() {
                    return Err(Error::Scenario(format!(
                        "route `{}` is claimed by two sources",
                        self.routes[r].id
                    )));
                }
                route_owner[r] = Some(si);
            }
        }
        Ok(())
    }
}

/// Integrator and convergence settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Euler step, seconds.
    pub dt: f64,
    /// Hard stop, seconds of simulated time.
    pub horizon: f64,
    /// Convergence threshold on the largest rate derivative, Mbps/s.
    pub conv_tol: f64,
    /// Steps the threshold must hold consecutively.
    pub conv_hold_steps: u32,
    /// Rate floor for selected routes, Mbps; keeps the regulation term finite.
    pub x_min: f64,
    /// Initial per-route rate, Mbps (clamped to half the route bottleneck).
    pub x_init: f64,
    /// Weight the marginal-power term of the realtime driver by alpha_s
    /// (gradient-consistent). `false` reproduces the bare `-b_r` form.
    pub phi_alpha_weighting: bool,
    /// Keep one trace row every this many steps.
    pub record_every: u32,
    /// Stop early once converged and no termination event is pending.
    pub stop_on_convergence: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-3,
            horizon: 600.0,
            conv_tol: 1e-4,
            conv_hold_steps: 1000,
            x_min: 1e-6,
            x_init: 1.0,
            phi_alpha_weighting: true,
            record_every: 100,
            stop_on_convergence: true,
        }
    }
}

impl SimConfig {
    /// Stiffness guard: reject steps that would make price or rate updates
    /// overshoot. Price loops need `dt * gamma_l * c_l <= 0.1`; rate loops
    /// are checked against a per-source estimate of `k_r * |dphi/dx|` at the
    /// capacity scale.
    pub fn validate(&self, scenario: &Scenario) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Scenario("dt must be > 0".into()));
        }
        if self.horizon <= self.dt || self.horizon.is_nan() {
            return Err(Error::Scenario("horizon must exceed dt".into()));
        }
        if self.x_min <= 0.0 || self.x_min.is_nan() {
            return Err(Error::Scenario("x_min must be > 0".into()));
        }
        for link in &scenario.links {
            if self.dt * link.price_gain * link.capacity > 0.1 {
                return Err(Error::Scenario(format!(
                    "dt too large for link `{}`: dt * gamma * c = {:.3} > 0.1",
                    link.id,
                    self.dt * link.price_gain * link.capacity
                )));
            }
        }
        for source in &scenario.sources {
            let caps: Vec<f64> = source
                .routes
                .iter()
                .map(|&r| {
                    scenario.routes[r]
                        .links
                        .iter()
                        .map(|&l| scenario.links[l].capacity)
                        .fold(f64::INFINITY, f64::min)
                        .min(scenario.routes[r].path.c)
                })
                .collect();
            let max_cap = caps.iter().cloned().fold(0.0, f64::max);
            let agg: f64 = caps.iter().sum();
            let gain = caps
                .iter()
                .map(|&c| 0.5 * c * (c + max_cap))
                .fold(0.0, f64::max);
            let mut slope = source.utility.second_deriv(agg).abs();
            if source.controller == ControllerKind::EeFileTransfer {
                let total_theta: f64 = source
                    .routes
                    .iter()
                    .map(|&r| scenario.routes[r].path.theta)
                    .sum();
                slope += source.alpha_s * 2.0 * total_theta / (agg * agg * agg);
            }
            if self.dt * gain * slope > 0.1 {
                return Err(Error::Scenario(format!(
                    "dt too large for source `{}`: estimated dt * k * |dphi/dx| = {:.3} > 0.1",
                    source.id,
                    self.dt * gain * slope
                )));
            }
        }
        Ok(())
    }
}

/// The selection a simulated source applies before rates start moving.
///
/// Energy-aware realtime sources solve the instantaneous-power problem —
/// exactly for up to [`crate::select::psp1::BRUTEFORCE_MAX_PATHS`] paths,
/// by the greedy scan beyond that. File-transfer sources solve the
/// energy-per-bit problem by the exact prefix scan. The other controllers
/// turn everything on.
pub fn select_routes(
    controller: ControllerKind,
    paths: &[PathSpec],
    utility: &UtilityFunction,
    alpha_s: f64,
) -> Result<Option<SelectionResult>> {
    match controller {
        ControllerKind::SinglePath | ControllerKind::RegularMptcp => Ok(None),
        ControllerKind::EeRealtime => {
            let inst = Instance::new(paths.to_vec(), *utility, alpha_s)?;
            let res = match paths.len() {
                2 => solve_psp1_two_path(&inst)?,
                n if n <= crate::select::psp1::BRUTEFORCE_MAX_PATHS => {
                    solve_psp1_bruteforce(&inst)?
                }
                _ => solve_psp1_greedy(&inst)?,
            };
            Ok(Some(res))
        }
        ControllerKind::EeFileTransfer => {
            let inst = Instance::new(paths.to_vec(), *utility, alpha_s)?;
            Ok(Some(solve_psp2(&inst)?))
        }
    }
}

/// Reported stability envelope for an energy-per-bit controller.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StabilityBound {
    /// Largest per-route rate (Mbps) the sufficient condition covers;
    /// +inf when the condition never binds.
    pub mbps: f64,
    /// True when more than 9 selected paths push the bound's numerator
    /// negative; the condition says nothing there and 0 is reported.
    pub outside_regime: bool,
}

/// Sufficient stability condition for the regulated energy-per-bit
/// controller with a NewReno utility:
/// `|x|_inf <= beta / (2 alpha_s tau^2) * (9/|s| - 1) / (max b - min b)`.
pub fn stability_bound(beta: f64, alpha_s: f64, tau: f64, selected_b: &[f64]) -> StabilityBound {
    assert!(!selected_b.is_empty(), "stability bound needs a selected set");
    let n = selected_b.len() as f64;
    let numerator = 9.0 / n - 1.0;
    if numerator < 0.0 {
        return StabilityBound {
            mbps: 0.0,
            outside_regime: true,
        };
    }
    let spread = selected_b.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - selected_b.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread <= 0.0 || alpha_s == 0.0 {
        return StabilityBound {
            mbps: f64::INFINITY,
            outside_regime: false,
        };
    }
    StabilityBound {
        mbps: beta / (2.0 * alpha_s * tau * tau) * numerator / spread,
        outside_regime: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stability_bound_reference_values() {
        // beta = 1, alpha_s tau^2 = 1e-5, two paths with b in {52, 238.2}.
        let b = stability_bound(1.0, 1.0, 1e-5_f64.sqrt(), &[52.0, 238.2]);
        assert!((b.mbps - 939.849_624_060_150_3).abs() < 1e-6);
        assert!(!b.outside_regime);
        // A 87.5 mW/Mbps spread turns the same prefactor into
        // 0.02 * beta / (alpha_s tau^2) = 2000 Mbps.
        let b = stability_bound(1.0, 1.0, 1e-5_f64.sqrt(), &[52.0, 139.5]);
        assert!((b.mbps - 2000.0).abs() < 1e-9);
    }

    #[test]
    fn stability_bound_edge_cases() {
        let single = stability_bound(0.2, 3.0, 0.1, &[52.0]);
        assert!(single.mbps.is_infinite());
        let many = stability_bound(0.2, 3.0, 0.1, &[1.0; 10]);
        assert_eq!(many.mbps, 0.0);
        assert!(many.outside_regime);
    }

    #[test]
    fn selection_policy_matches_solvers() {
        let paths = vec![PathSpec::wifi(), PathSpec::lte()];
        let u = UtilityFunction::new_reno(0.1).unwrap();
        let rt = select_routes(ControllerKind::EeRealtime, &paths, &u, 5.0)
            .unwrap()
            .unwrap();
        assert_eq!(rt.chosen, vec!["wifi".to_string()]);
        let ft = select_routes(ControllerKind::EeFileTransfer, &paths, &u, 5.0)
            .unwrap()
            .unwrap();
        assert_eq!(ft.chosen, vec!["lte".to_string()]);
        assert!(select_routes(ControllerKind::RegularMptcp, &paths, &u, 5.0)
            .unwrap()
            .is_none());
    }
}

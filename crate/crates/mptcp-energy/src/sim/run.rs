//! Explicit-Euler integration loop, trace recording, and summary metrics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fmt_sig;
use crate::path::RateVector;
use crate::select::SelectionResult;
use crate::utility::UtilityFunction;

use super::dynamics::{gain, phi};
use super::{
    select_routes, stability_bound, AppKind, ControllerKind, Scenario, SelectionPolicy, SimConfig,
};

/// Mutable simulation state: time, per-route rates, per-link prices,
/// per-source progress.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    /// Rate per route, Mbps. Zero for routes that are off.
    pub x: Vec<f64>,
    /// Price per link.
    pub p: Vec<f64>,
    /// Delivered volume per source, Mbit.
    pub transferred: Vec<f64>,
    pub source_active: Vec<bool>,
    /// Whether each route was selected and its source is still running.
    pub route_on: Vec<bool>,
}

/// Time series of the run, decimated to `record_every` steps.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    /// Column names: `t`, `x_<route>`..., `p_<link>`..., `power_mw_<source>`...
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Trace {
    /// CSV with a header row, LF line endings, six significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| fmt_sig(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// A source leaving the system (file complete or realtime duration over).
#[derive(Debug, Clone, Serialize)]
pub struct TerminationEvent {
    pub t: f64,
    pub source: String,
    /// Every route's rate just before the departure.
    pub rates_before: Vec<f64>,
    /// Device-level energy spent so far (sunk power counted once per
    /// interface), Joules.
    pub device_energy_j: f64,
}

/// Per-source summary at the end of a run.
#[derive(Debug, Clone, Serialize)]
pub struct SourceMetrics {
    pub id: String,
    /// Aggregate rate at the source's end (its departure, or the run's end).
    pub throughput_mbps: f64,
    pub rates: RateVector,
    /// Power at that same snapshot, mW.
    pub power_mw: f64,
    /// Power over throughput, mJ/Mb; absent when nothing flowed.
    pub energy_per_bit: Option<f64>,
    /// Energy this source paid from start to its end, Joules (sunk power of
    /// each selected interface for the whole interval, plus marginal power).
    pub energy_j: f64,
    /// Departure time for file transfers (interpolated inside the final
    /// step) and finished realtime sources.
    pub completion_time: Option<f64>,
    pub selected_routes: Vec<String>,
}

/// Run summary.
#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    /// True when rate derivatives settled below tolerance, or every source
    /// ran to its natural end.
    pub converged: bool,
    /// First time the convergence hold completed, if it did.
    pub convergence_time: Option<f64>,
    pub end_time: f64,
    pub per_source: Vec<SourceMetrics>,
    /// Whole-device energy with each interface's sunk power counted once,
    /// Joules.
    pub device_energy_j: f64,
    pub warnings: Vec<String>,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: Metrics,
    pub trace: Trace,
    pub events: Vec<TerminationEvent>,
}

/// Validate inputs, run selection, integrate to the horizon.
pub fn run(scenario: &Scenario, config: &SimConfig) -> Result<RunOutput> {
    Simulation::new(scenario.clone(), config.clone())?.run()
}

enum StopReason {
    AllSourcesDone,
    Converged,
    Horizon,
}

/// One owned simulation. [`Simulation::step`] is public so callers can drive
/// the system manually; [`Simulation::run`] is the batteries-included loop.
pub struct Simulation {
    scenario: Scenario,
    config: SimConfig,
    pub state: SimState,
    route_source: Vec<usize>,
    /// Distinct interfaces: (path id, theta, b, route indices).
    interfaces: Vec<(String, f64, f64, Vec<usize>)>,
    selections: Vec<Option<SelectionResult>>,
    selected_route_ids: Vec<Vec<String>>,
    steps: u64,
    hold_counter: u32,
    convergence_time: Option<f64>,
    source_energy_mj: Vec<f64>,
    device_energy_mj: f64,
    completion: Vec<Option<f64>>,
    end_snapshot: Vec<Option<Vec<f64>>>,
    max_subflow: Vec<f64>,
    events: Vec<TerminationEvent>,
    trace: Trace,
    warnings: Vec<String>,
    // scratch
    y: Vec<f64>,
    q: Vec<f64>,
}

impl Simulation {
    pub fn new(scenario: Scenario, config: SimConfig) -> Result<Self> {
        scenario.validate()?;
        config.validate(&scenario)?;

        let n_routes = scenario.routes.len();
        let n_links = scenario.links.len();
        let n_sources = scenario.sources.len();

        let mut route_source = vec![usize::MAX; n_routes];
        for (si, source) in scenario.sources.iter().enumerate() {
            for &r in &source.routes {
                route_source[r] = si;
            }
        }

        // Group routes by interface and check the power parameters agree.
        let mut interfaces: Vec<(String, f64, f64, Vec<usize>)> = Vec::new();
        for (ri, route) in scenario.routes.iter().enumerate() {
            match interfaces.iter_mut().find(|(id, ..)| *id == route.path.id) {
                Some((id, theta, b, routes)) => {
                    if (*theta - route.path.theta).abs() > 1e-12 || (*b - route.path.b).abs() > 1e-12
                    {
                        return Err(Error::Scenario(format!(
                            "interface `{id}` has conflicting power parameters across routes"
                        )));
                    }
                    routes.push(ri);
                }
                None => interfaces.push((
                    route.path.id.clone(),
                    route.path.theta,
                    route.path.b,
                    vec![ri],
                )),
            }
        }

        // Path selection, once per source.
        let mut route_on = vec![false; n_routes];
        let mut selections = vec![None; n_sources];
        let mut selected_route_ids = vec![Vec::new(); n_sources];
        let mut warnings = Vec::new();
        for (si, source) in scenario.sources.iter().enumerate() {
            let on_ids: Vec<String> = match &source.selection {
                SelectionPolicy::Fixed(ids) => {
                    for id in ids {
                        if !source
                            .routes
                            .iter()
                            .any(|&r| scenario.routes[r].id == *id)
                        {
                            return Err(Error::Scenario(format!(
                                "source `{}`: fixed selection names unknown route `{id}`",
                                source.id
                            )));
                        }
                    }
                    ids.clone()
                }
                SelectionPolicy::Auto => {
                    // Present each route to the solver as a path named after
                    // the route, so shared interfaces stay distinguishable.
                    let paths: Vec<_> = source
                        .routes
                        .iter()
                        .map(|&r| {
                            let mut p = scenario.routes[r].path.clone();
                            p.id = scenario.routes[r].id.clone();
                            p
                        })
                        .collect();
                    match select_routes(source.controller, &paths, &source.utility, source.alpha_s)?
                    {
                        Some(res) => {
                            for w in &res.warnings {
                                warnings.push(format!("source `{}`: {w}", source.id));
                            }
                            let chosen = res.chosen.clone();
                            selections[si] = Some(res);
                            chosen
                        }
                        None => source
                            .routes
                            .iter()
                            .map(|&r| scenario.routes[r].id.clone())
                            .collect(),
                    }
                }
            };
            for &r in &source.routes {
                if on_ids.iter().any(|id| *id == scenario.routes[r].id) {
                    route_on[r] = true;
                }
            }
            selected_route_ids[si] = on_ids;
        }

        let mut x = vec![0.0; n_routes];
        for (ri, route) in scenario.routes.iter().enumerate() {
            if route_on[ri] {
                let bottleneck = route
                    .links
                    .iter()
                    .map(|&l| scenario.links[l].capacity)
                    .fold(f64::INFINITY, f64::min)
                    .min(route.path.c);
                x[ri] = (config.x_init.min(0.5 * bottleneck)).max(config.x_min);
            }
        }

        let mut columns = vec!["t".to_string()];
        columns.extend(scenario.routes.iter().map(|r| format!("x_{}", r.id)));
        columns.extend(scenario.links.iter().map(|l| format!("p_{}", l.id)));
        columns.extend(
            scenario
                .sources
                .iter()
                .map(|s| format!("power_mw_{}", s.id)),
        );

        let state = SimState {
            t: 0.0,
            x,
            p: vec![0.0; n_links],
            transferred: vec![0.0; n_sources],
            source_active: vec![true; n_sources],
            route_on,
        };

        let mut sim = Simulation {
            route_source,
            interfaces,
            selections,
            selected_route_ids,
            steps: 0,
            hold_counter: 0,
            convergence_time: None,
            source_energy_mj: vec![0.0; n_sources],
            device_energy_mj: 0.0,
            completion: vec![None; n_sources],
            end_snapshot: vec![None; n_sources],
            max_subflow: vec![0.0; n_sources],
            events: Vec::new(),
            trace: Trace {
                columns,
                rows: Vec::new(),
            },
            warnings,
            y: vec![0.0; n_links],
            q: vec![0.0; n_routes],
            scenario,
            config,
            state,
        };
        sim.record_row();
        Ok(sim)
    }

    /// The selection each source applies (None for controllers that use
    /// every route).
    pub fn selection(&self, source: usize) -> Option<&SelectionResult> {
        self.selections[source].as_ref()
    }

    pub fn selected_route_ids(&self, source: usize) -> &[String] {
        &self.selected_route_ids[source]
    }

    /// Current driver value for one route (before subtracting the price).
    pub fn phi(&self, route: usize) -> f64 {
        let si = self.route_source[route];
        let source = &self.scenario.sources[si];
        let (aggregate, x_max, total_power) = self.source_load(si);
        phi(
            source.controller,
            &source.utility,
            source.alpha_s,
            source.beta,
            self.config.phi_alpha_weighting,
            self.scenario.routes[route].path.b,
            self.state.x[route],
            x_max,
            aggregate,
            total_power,
        )
    }

    fn source_load(&self, si: usize) -> (f64, f64, f64) {
        let mut aggregate = 0.0;
        let mut x_max: f64 = 0.0;
        let mut total_power = 0.0;
        for &r in &self.scenario.sources[si].routes {
            if self.state.route_on[r] {
                let x = self.state.x[r];
                aggregate += x;
                x_max = x_max.max(x);
                total_power += self.scenario.routes[r].path.b * x + self.scenario.routes[r].path.theta;
            }
        }
        (aggregate, x_max, total_power)
    }

    /// Advance one Euler step; returns the largest effective rate derivative
    /// (Mbps/s), with projections applied.
    pub fn step(&mut self) -> Result<f64> {
        let dt = self.config.dt;
        let t_before = self.state.t;

        // Link loads and route prices from the current state.
        self.y.iter_mut().for_each(|v| *v = 0.0);
        for (ri, route) in self.scenario.routes.iter().enumerate() {
            if self.state.route_on[ri] {
                for &l in &route.links {
                    self.y[l] += self.state.x[ri];
                }
            }
        }
        for (ri, route) in self.scenario.routes.iter().enumerate() {
            self.q[ri] = route.links.iter().map(|&l| self.state.p[l]).sum();
        }

        // Energy accounting at the left endpoint.
        for si in 0..self.scenario.sources.len() {
            if !self.state.source_active[si] {
                continue;
            }
            let (aggregate, _, total_power) = self.source_load(si);
            self.source_energy_mj[si] += dt * total_power;
            self.state.transferred[si] += dt * aggregate;
        }
        for (_, theta, b, routes) in &self.interfaces {
            let mut sum = 0.0;
            let mut any_on = false;
            for &r in routes {
                if self.state.route_on[r] {
                    any_on = true;
                    sum += self.state.x[r];
                }
            }
            if any_on {
                self.device_energy_mj += dt * (theta + b * sum);
            }
        }

        // Rate updates.
        let mut max_xdot: f64 = 0.0;
        for (si, source) in self.scenario.sources.iter().enumerate() {
            if !self.state.source_active[si] {
                continue;
            }
            let (aggregate, x_max, total_power) = self.source_load(si);
            self.max_subflow[si] = self.max_subflow[si].max(x_max);
            for &r in &source.routes {
                if !self.state.route_on[r] {
                    continue;
                }
                let x = self.state.x[r];
                let driver = phi(
                    source.controller,
                    &source.utility,
                    source.alpha_s,
                    source.beta,
                    self.config.phi_alpha_weighting,
                    self.scenario.routes[r].path.b,
                    x,
                    x_max,
                    aggregate,
                    total_power,
                ) - self.q[r];
                let xdot = if x <= self.config.x_min && driver < 0.0 {
                    0.0
                } else {
                    gain(x, x_max) * driver
                };
                let x_new = (x + dt * xdot).max(self.config.x_min);
                if !x_new.is_finite() {
                    return Err(Error::NumericalBlowup {
                        t: self.state.t,
                        detail: format!("rate on route `{}`", self.scenario.routes[r].id),
                    });
                }
                max_xdot = max_xdot.max(((x_new - x) / dt).abs());
                self.state.x[r] = x_new;
            }
        }

        // Price updates.
        for (li, link) in self.scenario.links.iter().enumerate() {
            let p_new =
                (self.state.p[li] + dt * link.price_gain * (self.y[li] - link.capacity)).max(0.0);
            if !p_new.is_finite() {
                return Err(Error::NumericalBlowup {
                    t: self.state.t,
                    detail: format!("price on link `{}`", link.id),
                });
            }
            self.state.p[li] = p_new;
        }

        self.state.t += dt;
        self.steps += 1;

        // Departures, applied at the end of the step.
        let mut departed = false;
        for si in 0..self.scenario.sources.len() {
            if !self.state.source_active[si] {
                continue;
            }
            let done_at = match self.scenario.sources[si].app {
                AppKind::FileTransfer { size } => {
                    if self.state.transferred[si] >= size {
                        let (aggregate, _, _) = self.source_load(si);
                        let overshoot = self.state.transferred[si] - size;
                        let back = if aggregate > 0.0 {
                            overshoot / aggregate
                        } else {
                            0.0
                        };
                        Some((self.state.t - back).clamp(t_before, self.state.t))
                    } else {
                        None
                    }
                }
                AppKind::Realtime { duration } => {
                    if self.state.t >= duration - 1e-12 {
                        Some(duration)
                    } else {
                        None
                    }
                }
            };
            if let Some(at) = done_at {
                self.completion[si] = Some(at);
                self.end_snapshot[si] = Some(self.state.x.clone());
                self.events.push(TerminationEvent {
                    t: at,
                    source: self.scenario.sources[si].id.clone(),
                    rates_before: self.state.x.clone(),
                    device_energy_j: self.device_energy_mj / 1000.0,
                });
                self.state.source_active[si] = false;
                for &r in &self.scenario.sources[si].routes {
                    self.state.route_on[r] = false;
                    self.state.x[r] = 0.0;
                }
                departed = true;
            }
        }

        if departed {
            self.hold_counter = 0;
        } else if max_xdot < self.config.conv_tol {
            self.hold_counter += 1;
            if self.hold_counter == self.config.conv_hold_steps && self.convergence_time.is_none() {
                self.convergence_time = Some(self.state.t);
            }
        } else {
            self.hold_counter = 0;
        }

        if self.steps.is_multiple_of(self.config.record_every as u64) {
            self.record_row();
        }
        Ok(max_xdot)
    }

    fn record_row(&mut self) {
        let mut row = Vec::with_capacity(self.trace.columns.len());
        row.push(self.state.t);
        row.extend_from_slice(&self.state.x);
        row.extend_from_slice(&self.state.p);
        for si in 0..self.scenario.sources.len() {
            let power = if self.state.source_active[si] {
                self.source_load(si).2
            } else {
                0.0
            };
            row.push(power);
        }
        self.trace.rows.push(row);
    }

    fn pending_departures(&self) -> bool {
        self.scenario
            .sources
            .iter()
            .enumerate()
            .any(|(si, s)| {
                self.state.source_active[si]
                    && match s.app {
                        AppKind::FileTransfer { .. } => true,
                        AppKind::Realtime { duration } => duration <= self.config.horizon,
                    }
            })
    }

    /// Integrate until everything departed, the system converged with no
    /// departure pending, or the horizon.
    pub fn run(mut self) -> Result<RunOutput> {
        let reason = loop {
            if self.state.source_active.iter().all(|a| !a) {
                break StopReason::AllSourcesDone;
            }
            if self.state.t >= self.config.horizon - 0.5 * self.config.dt {
                break StopReason::Horizon;
            }
            if self.config.stop_on_convergence
                && self.hold_counter >= self.config.conv_hold_steps
                && !self.pending_departures()
            {
                break StopReason::Converged;
            }
            self.step()?;
        };
        if !self.steps.is_multiple_of(self.config.record_every as u64) {
            self.record_row();
        }
        self.finish(reason)
    }

    fn finish(mut self, reason: StopReason) -> Result<RunOutput> {
        let converged = match reason {
            StopReason::AllSourcesDone | StopReason::Converged => true,
            StopReason::Horizon => self.hold_counter >= self.config.conv_hold_steps,
        };

        // Stability envelope check for regulated energy-per-bit sources.
        for (si, source) in self.scenario.sources.iter().enumerate() {
            if source.controller != ControllerKind::EeFileTransfer {
                continue;
            }
            if let UtilityFunction::NewReno { tau } = source.utility {
                let bs: Vec<f64> = source
                    .routes
                    .iter()
                    .filter(|&&r| self.selected_route_ids[si]
                        .iter()
                        .any(|id| *id == self.scenario.routes[r].id))
                    .map(|&r| self.scenario.routes[r].path.b)
                    .collect();
                if bs.is_empty() {
                    continue;
                }
                let bound = stability_bound(source.beta, source.alpha_s, tau, &bs);
                if bound.outside_regime {
                    self.warnings.push(format!(
                        "source `{}`: more than 9 selected paths, stability condition out of range",
                        source.id
                    ));
                } else if self.max_subflow[si] > bound.mbps {
                    self.warnings.push(format!(
                        "source `{}`: largest subflow {:.3} Mbps exceeded its stability envelope {:.3} Mbps",
                        source.id, self.max_subflow[si], bound.mbps
                    ));
                }
            }
        }

        let mut per_source = Vec::with_capacity(self.scenario.sources.len());
        for (si, source) in self.scenario.sources.iter().enumerate() {
            let snapshot = self.end_snapshot[si].clone().unwrap_or_else(|| self.state.x.clone());
            let mut rates = RateVector::new();
            let mut throughput = 0.0;
            let mut power = 0.0;
            for &r in &source.routes {
                let selected = self.selected_route_ids[si]
                    .iter()
                    .any(|id| *id == self.scenario.routes[r].id);
                let x = if selected { snapshot[r] } else { 0.0 };
                rates.push(self.scenario.routes[r].id.clone(), x);
                throughput += x;
                if selected {
                    power += self.scenario.routes[r].path.b * x + self.scenario.routes[r].path.theta;
                }
            }
            let energy_per_bit = if throughput > self.config.x_min * 10.0 {
                Some(power / throughput)
            } else {
                None
            };
            per_source.push(SourceMetrics {
                id: source.id.clone(),
                throughput_mbps: throughput,
                rates,
                power_mw: power,
                energy_per_bit,
                energy_j: self.source_energy_mj[si] / 1000.0,
                completion_time: self.completion[si],
                selected_routes: self.selected_route_ids[si].clone(),
            });
        }

        let metrics = Metrics {
            converged,
            convergence_time: self.convergence_time,
            end_time: self.state.t,
            per_source,
            device_energy_j: self.device_energy_mj / 1000.0,
            warnings: self.warnings,
        };
        Ok(RunOutput {
            metrics,
            trace: self.trace,
            events: self.events,
        })
    }
}

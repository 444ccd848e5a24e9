//! Prebuilt scenarios sweeping the throughput/energy tradeoff on a
//! WiFi + LTE device, emitting one tidy metrics row per (scenario, alpha,
//! source) point.
//!
//! Experiment names accepted by [`by_name`] (and the CLI's `reproduce`):
//! `bottleneck-energy`, `tradeoff-realtime`, `tradeoff-filetransfer`,
//! `friendliness`, `two-apps`.

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::fmt_sig;
use crate::path::PathSpec;
use crate::select::{solve_psp1_two_path, solve_psp2, Instance};
use crate::sim::{
    run, AppKind, ControllerKind, Link, Route, RunOutput, Scenario, SelectionPolicy, SimConfig,
    Source,
};
use crate::utility::UtilityFunction;

/// One measured point of an experiment.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsRow {
    pub scenario: String,
    pub alpha_s: f64,
    pub source: String,
    pub controller: String,
    /// Selected paths, joined by `+`.
    pub chosen: String,
    pub throughput_mbps: f64,
    pub power_mw: f64,
    pub energy_per_bit: Option<f64>,
    pub energy_j: f64,
    pub completion_s: Option<f64>,
    pub converged: bool,
}

pub const CSV_HEADER: &str = "scenario,alpha_s,source,controller,chosen,throughput_mbps,power_mw,energy_per_bit_mj_mb,energy_j,completion_s,converged";

pub fn rows_to_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let opt = |v: Option<f64>| v.map(fmt_sig).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.scenario,
            fmt_sig(r.alpha_s),
            r.source,
            r.controller,
            r.chosen,
            fmt_sig(r.throughput_mbps),
            fmt_sig(r.power_mw),
            opt(r.energy_per_bit),
            fmt_sig(r.energy_j),
            opt(r.completion_s),
            r.converged,
        ));
    }
    out
}

/// Rows plus a per-experiment JSON summary.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub name: String,
    pub rows: Vec<MetricsRow>,
    pub summary: serde_json::Value,
    /// True when every underlying run converged.
    pub all_converged: bool,
}

pub fn by_name(name: &str) -> Result<ExperimentOutput> {
    match name {
        "bottleneck-energy" => bottleneck_energy(),
        "tradeoff-realtime" => sweep_tradeoff(AppFlavor::Realtime),
        "tradeoff-filetransfer" => sweep_tradeoff(AppFlavor::FileTransfer),
        "friendliness" => friendliness(),
        "two-apps" => two_apps(),
        other => Err(Error::UnknownExperiment(other.to_string())),
    }
}

pub const EXPERIMENT_NAMES: &[&str] = &[
    "bottleneck-energy",
    "tradeoff-realtime",
    "tradeoff-filetransfer",
    "friendliness",
    "two-apps",
];

/// Which application a sweep models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AppFlavor {
    Realtime,
    FileTransfer,
}

fn controller_name(c: ControllerKind) -> &'static str {
    match c {
        ControllerKind::SinglePath => "single_path",
        ControllerKind::RegularMptcp => "regular_mptcp",
        ControllerKind::EeRealtime => "ee_realtime",
        ControllerKind::EeFileTransfer => "ee_file_transfer",
    }
}

/// WiFi + LTE device with both routes crossing one core link of capacity
/// `core_capacity` (use a huge value for an uncongested core). `gamma_scale`
/// sets every price gain to `gamma_scale / capacity`.
fn cell_scenario(
    source: Source,
    core_capacity: f64,
    gamma_scale: f64,
) -> Scenario {
    let wifi = PathSpec::wifi();
    let lte = PathSpec::lte();
    let links = vec![
        Link::new("wifi", wifi.c).with_gain(gamma_scale / wifi.c),
        Link::new("lte", lte.c).with_gain(gamma_scale / lte.c),
        Link::new("core", core_capacity).with_gain(gamma_scale / core_capacity),
    ];
    let routes = vec![
        Route {
            id: "over_wifi".into(),
            links: vec![0, 2],
            path: wifi,
        },
        Route {
            id: "over_lte".into(),
            links: vec![1, 2],
            path: lte,
        },
    ];
    Scenario {
        links,
        routes,
        sources: vec![source],
    }
}

fn device_source(
    id: &str,
    controller: ControllerKind,
    utility: UtilityFunction,
    alpha_s: f64,
    beta: f64,
) -> Source {
    Source {
        id: id.into(),
        routes: vec![0, 1],
        controller,
        utility,
        alpha_s,
        beta,
        app: AppKind::Realtime { duration: 1e9 },
        selection: SelectionPolicy::Auto,
    }
}

fn row_from_run(scenario: &str, alpha_s: f64, controller: ControllerKind, out: &RunOutput) -> MetricsRow {
    let sm = &out.metrics.per_source[0];
    MetricsRow {
        scenario: scenario.into(),
        alpha_s,
        source: sm.id.clone(),
        controller: controller_name(controller).into(),
        chosen: sm.selected_routes.join("+"),
        throughput_mbps: sm.throughput_mbps,
        power_mw: sm.power_mw,
        energy_per_bit: sm.energy_per_bit,
        energy_j: sm.energy_j,
        completion_s: sm.completion_time,
        converged: out.metrics.converged,
    }
}

/// Smallest alpha at which `reached` first holds on the WiFi + LTE device,
/// found by bisection (the selection regimes are nested in alpha).
fn selection_threshold(
    utility: UtilityFunction,
    hi: f64,
    reached: impl Fn(&Instance) -> Result<bool>,
) -> Result<f64> {
    let inst = |alpha: f64| {
        Instance::new(vec![PathSpec::wifi(), PathSpec::lte()], utility, alpha).unwrap()
    };
    let mut lo = 0.0;
    let mut hi = hi;
    if !reached(&inst(hi))? {
        return Ok(hi);
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if reached(&inst(mid))? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Shared 10 Mbps bottleneck behind both access links: a regular multipath
/// flow against the energy-aware file-transfer controller across an alpha
/// grid. The round-trip time (23.6 ms) puts the selection crossover near
/// alpha = 2.4; the energy-aware flow runs unregulated (beta = 0) so its
/// steady state is the optimum rather than the responsiveness-biased split.
pub fn bottleneck_energy() -> Result<ExperimentOutput> {
    let tau = 0.0236;
    let utility = UtilityFunction::new_reno(tau).unwrap();
    let config = SimConfig {
        dt: 1e-4,
        horizon: 150.0,
        ..SimConfig::default()
    };

    let mut rows = Vec::new();
    let mut all_converged = true;

    // Baseline: regular multipath, energy-blind.
    let regular = cell_scenario(
        device_source("flow", ControllerKind::RegularMptcp, utility, 0.0, 0.2),
        10.0,
        50.0,
    );
    let out = run(&regular, &config)?;
    all_converged &= out.metrics.converged;
    rows.push(row_from_run(
        "bottleneck-energy",
        0.0,
        ControllerKind::RegularMptcp,
        &out,
    ));
    let regular_energy = rows[0].energy_per_bit;

    let grid = [0.25, 0.5, 1.0, 1.5, 2.0, 2.3, 2.5, 3.0, 3.5, 4.0, 4.5];
    for &alpha in &grid {
        let scenario = cell_scenario(
            device_source("flow", ControllerKind::EeFileTransfer, utility, alpha, 0.0),
            10.0,
            50.0,
        );
        let out = run(&scenario, &config)?;
        all_converged &= out.metrics.converged;
        rows.push(row_from_run(
            "bottleneck-energy",
            alpha,
            ControllerKind::EeFileTransfer,
            &out,
        ));
    }

    let crossover = selection_threshold(utility, 10.0, |inst| {
        Ok(solve_psp2(inst)?.chosen.len() < 2)
    })?;
    let ee_rows: Vec<&MetricsRow> = rows[1..].iter().collect();
    let mean_plateau = |below: bool| {
        let vals: Vec<f64> = ee_rows
            .iter()
            .filter(|r| (r.alpha_s < crossover) == below)
            .filter_map(|r| r.energy_per_bit)
            .collect();
        vals.iter().sum::<f64>() / vals.len().max(1) as f64
    };
    let summary = json!({
        "regular_energy_per_bit": regular_energy,
        "plateau_small_alpha": mean_plateau(true),
        "plateau_large_alpha": mean_plateau(false),
        "crossover_alpha": crossover,
        "savings_large_alpha": regular_energy.map(|r| 1.0 - mean_plateau(false) / r),
    });
    Ok(ExperimentOutput {
        name: "bottleneck-energy".into(),
        rows,
        summary,
        all_converged,
    })
}

/// Uncongested core: selection plus equilibrium rates across alpha for one
/// energy-aware flow. The grid spans zero to ten times the analytic
/// threshold where the selection stops using both paths.
pub fn sweep_tradeoff(flavor: AppFlavor) -> Result<ExperimentOutput> {
    let tau = 0.1;
    let utility = UtilityFunction::new_reno(tau).unwrap();
    let (name, controller) = match flavor {
        AppFlavor::Realtime => ("tradeoff-realtime", ControllerKind::EeRealtime),
        AppFlavor::FileTransfer => ("tradeoff-filetransfer", ControllerKind::EeFileTransfer),
    };
    // For realtime the interesting final regime is the switch onto the
    // low-sunk-power path (WiFi); sweep ten times past it. For file
    // transfer the single switch is both -> LTE.
    let threshold = match flavor {
        AppFlavor::Realtime => selection_threshold(utility, 1e4, |inst| {
            Ok(solve_psp1_two_path(inst)?.chosen == ["wifi".to_string()])
        })?,
        AppFlavor::FileTransfer => selection_threshold(utility, 1e4, |inst| {
            Ok(solve_psp2(inst)?.chosen.len() < 2)
        })?,
    };

    let mut grid = vec![0.0];
    let lo = threshold / 20.0;
    let hi = threshold * 10.0;
    let points = 10;
    for i in 0..points {
        grid.push(lo * (hi / lo).powf(i as f64 / (points - 1) as f64));
    }

    let config = SimConfig {
        dt: 5e-4,
        horizon: 120.0,
        ..SimConfig::default()
    };
    let mut rows = Vec::new();
    let mut all_converged = true;
    for &alpha in &grid {
        let scenario = cell_scenario(
            device_source("flow", controller, utility, alpha, 0.2),
            1e6,
            10.0,
        );
        let out = run(&scenario, &config)?;
        all_converged &= out.metrics.converged;
        rows.push(row_from_run(name, alpha, controller, &out));
    }

    // The alpha = 0 reference: regular multipath on the same scenario.
    let regular = cell_scenario(
        device_source("flow", ControllerKind::RegularMptcp, utility, 0.0, 0.2),
        1e6,
        10.0,
    );
    let out = run(&regular, &config)?;
    all_converged &= out.metrics.converged;
    rows.push(row_from_run(name, 0.0, ControllerKind::RegularMptcp, &out));

    let sequence: Vec<String> = rows
        .iter()
        .filter(|r| r.controller != "regular_mptcp")
        .map(|r| r.chosen.clone())
        .collect();
    let summary = json!({
        "switch_threshold": threshold,
        "selection_sequence": sequence,
    });
    Ok(ExperimentOutput {
        name: name.into(),
        rows,
        summary,
        all_converged,
    })
}

/// One energy-aware flow against one plain TCP flow on a shared 10 Mbps
/// link, both NewReno with the same round trip; reports the throughput
/// ratio across alpha for both application flavours.
pub fn friendliness() -> Result<ExperimentOutput> {
    let tau = 0.1;
    let utility = UtilityFunction::new_reno(tau).unwrap();
    let shared = 10.0;
    // The energy-aware flow rides an LTE-like interface; the regular flow's
    // interface is free so only the shared link couples them.
    let ee_path = PathSpec::new("lte_wide", 52.0, 1288.0, 100.0).unwrap();
    let plain_path = PathSpec::new("plain", 0.0, 0.0, 100.0).unwrap();

    let config = SimConfig {
        dt: 1.5e-4,
        horizon: 200.0,
        ..SimConfig::default()
    };

    let mut rows = Vec::new();
    let mut ratios: Vec<(f64, f64, f64)> = Vec::new(); // (alpha, realtime, filetransfer)
    let mut all_converged = true;
    for i in 0..10 {
        let alpha = 2.0 * i as f64 / 9.0;
        let mut pair = [0.0; 2];
        for (slot, controller) in [
            (0, ControllerKind::EeRealtime),
            (1, ControllerKind::EeFileTransfer),
        ] {
            let scenario = Scenario {
                links: vec![
                    Link::new("shared", shared).with_gain(25.0 / shared),
                    Link::new("ee_access", ee_path.c).with_gain(25.0 / ee_path.c),
                    Link::new("plain_access", plain_path.c).with_gain(25.0 / plain_path.c),
                ],
                routes: vec![
                    Route {
                        id: "ee".into(),
                        links: vec![1, 0],
                        path: ee_path.clone(),
                    },
                    Route {
                        id: "plain".into(),
                        links: vec![2, 0],
                        path: plain_path.clone(),
                    },
                ],
                sources: vec![
                    Source {
                        id: "ee_flow".into(),
                        routes: vec![0],
                        controller,
                        utility,
                        alpha_s: alpha,
                        beta: 0.2,
                        app: AppKind::Realtime { duration: 1e9 },
                        selection: SelectionPolicy::Auto,
                    },
                    Source {
                        id: "regular_flow".into(),
                        routes: vec![1],
                        controller: ControllerKind::SinglePath,
                        utility,
                        alpha_s: 0.0,
                        beta: 0.2,
                        app: AppKind::Realtime { duration: 1e9 },
                        selection: SelectionPolicy::Auto,
                    },
                ],
            };
            let out = run(&scenario, &config)?;
            all_converged &= out.metrics.converged;
            let ee = &out.metrics.per_source[0];
            let reg = &out.metrics.per_source[1];
            pair[slot] = ee.throughput_mbps / reg.throughput_mbps;
            let name = match controller {
                ControllerKind::EeRealtime => "friendliness-realtime",
                _ => "friendliness-filetransfer",
            };
            for sm in &out.metrics.per_source {
                rows.push(MetricsRow {
                    scenario: name.into(),
                    alpha_s: alpha,
                    source: sm.id.clone(),
                    controller: if sm.id == "ee_flow" {
                        controller_name(controller).into()
                    } else {
                        "single_path".into()
                    },
                    chosen: sm.selected_routes.join("+"),
                    throughput_mbps: sm.throughput_mbps,
                    power_mw: sm.power_mw,
                    energy_per_bit: sm.energy_per_bit,
                    energy_j: sm.energy_j,
                    completion_s: sm.completion_time,
                    converged: out.metrics.converged,
                });
            }
        }
        ratios.push((alpha, pair[0], pair[1]));
    }

    let summary = json!({
        "alpha": ratios.iter().map(|r| r.0).collect::<Vec<_>>(),
        "ratio_realtime": ratios.iter().map(|r| r.1).collect::<Vec<_>>(),
        "ratio_filetransfer": ratios.iter().map(|r| r.2).collect::<Vec<_>>(),
    });
    Ok(ExperimentOutput {
        name: "friendliness".into(),
        rows,
        summary,
        all_converged,
    })
}

/// One comparison row of [`two_apps`].
#[derive(Debug, Clone, Serialize)]
pub struct TwoAppsRow {
    pub strategy: String,
    pub selected: String,
    /// Video-call rate while the file transfer is still running, Mbps.
    pub video_rate_mbps: f64,
    pub file_completion_s: f64,
    /// Device energy from start to file completion, Joules (sunk power
    /// counted once per interface).
    pub file_phase_energy_j: f64,
    /// Device energy over the whole 300 s call window, Joules.
    pub total_energy_j: f64,
}

/// A 5-minute video call and a 1000 Mbit download sharing one device at
/// alpha_s = 5, under three policies: regular multipath on both paths,
/// the realtime selection (WiFi at this weight), and the file-transfer
/// selection (LTE). Selection is solved once for the device with both
/// connections folded in; each connection then runs its own controller.
pub fn two_apps() -> Result<ExperimentOutput> {
    let tau = 0.1;
    let alpha_s = 5.0;
    let utility = UtilityFunction::new_reno(tau).unwrap();
    let wifi = PathSpec::wifi();
    let lte = PathSpec::lte();

    // Device-wide selection with two connections sharing the interfaces.
    let mut device = Instance::new(vec![wifi.clone(), lte.clone()], utility, alpha_s)?;
    device.n_connections = 2;
    let shared = device.scale_for_n_connections();
    let realtime_pick = solve_psp1_two_path(&shared)?.chosen;
    let file_pick = solve_psp2(&shared)?.chosen;

    let gamma_scale = 50.0;
    let config = SimConfig {
        dt: 8e-5,
        horizon: 400.0,
        ..SimConfig::default()
    };

    let strategies: Vec<(&str, Option<Vec<String>>)> = vec![
        ("regular-mptcp", None),
        ("algorithm-1", Some(realtime_pick.clone())),
        ("algorithm-2", Some(file_pick.clone())),
    ];

    let mut rows = Vec::new();
    let mut table = Vec::new();
    let mut all_converged = true;
    for (strategy, pick) in strategies {
        let links = vec![
            Link::new("wifi", wifi.c).with_gain(gamma_scale / wifi.c),
            Link::new("lte", lte.c).with_gain(gamma_scale / lte.c),
        ];
        let routes = vec![
            Route { id: "video_wifi".into(), links: vec![0], path: wifi.clone() },
            Route { id: "video_lte".into(), links: vec![1], path: lte.clone() },
            Route { id: "file_wifi".into(), links: vec![0], path: wifi.clone() },
            Route { id: "file_lte".into(), links: vec![1], path: lte.clone() },
        ];
        let selection_for = |prefix: &str| match &pick {
            None => SelectionPolicy::Auto,
            Some(ids) => SelectionPolicy::Fixed(
                ids.iter().map(|p| format!("{prefix}_{p}")).collect(),
            ),
        };
        let (video_ctl, file_ctl) = if pick.is_none() {
            (ControllerKind::RegularMptcp, ControllerKind::RegularMptcp)
        } else {
            (ControllerKind::EeRealtime, ControllerKind::EeFileTransfer)
        };
        let sources = vec![
            Source {
                id: "video".into(),
                routes: vec![0, 1],
                controller: video_ctl,
                utility,
                alpha_s,
                beta: 0.2,
                app: AppKind::Realtime { duration: 300.0 },
                selection: selection_for("video"),
            },
            Source {
                id: "file".into(),
                routes: vec![2, 3],
                controller: file_ctl,
                utility,
                alpha_s,
                beta: 0.2,
                app: AppKind::FileTransfer { size: 1000.0 },
                selection: selection_for("file"),
            },
        ];
        let scenario = Scenario { links, routes, sources };
        let out = run(&scenario, &config)?;
        all_converged &= out.metrics.converged;

        let file_event = out
            .events
            .iter()
            .find(|e| e.source == "file")
            .ok_or(Error::NonConvergence { horizon: config.horizon })?;
        let video_rate = file_event.rates_before[0] + file_event.rates_before[1];
        let file_metrics = out
            .metrics
            .per_source
            .iter()
            .find(|s| s.id == "file")
            .unwrap();
        table.push(TwoAppsRow {
            strategy: strategy.into(),
            selected: match &pick {
                None => "wifi+lte".into(),
                Some(ids) => ids.join("+"),
            },
            video_rate_mbps: video_rate,
            file_completion_s: file_metrics.completion_time.unwrap(),
            file_phase_energy_j: file_event.device_energy_j,
            total_energy_j: out.metrics.device_energy_j,
        });
        for sm in &out.metrics.per_source {
            rows.push(MetricsRow {
                scenario: format!("two-apps-{strategy}"),
                alpha_s,
                source: sm.id.clone(),
                controller: controller_name(if sm.id == "video" { video_ctl } else { file_ctl })
                    .into(),
                chosen: sm.selected_routes.join("+"),
                throughput_mbps: sm.throughput_mbps,
                power_mw: sm.power_mw,
                energy_per_bit: sm.energy_per_bit,
                energy_j: sm.energy_j,
                completion_s: sm.completion_time,
                converged: out.metrics.converged,
            });
        }
    }

    let summary = json!({
        "alpha_s": alpha_s,
        "table": table,
        "realtime_selection": realtime_pick,
        "file_selection": file_pick,
    });
    Ok(ExperimentOutput {
        name: "two-apps".into(),
        rows,
        summary,
        all_converged,
    })
}

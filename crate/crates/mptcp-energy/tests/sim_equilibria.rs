//! Equilibrium and invariant checks for the fluid simulator.

use mptcp_energy::path::PathSpec;
use mptcp_energy::sim::{
    run, AppKind, ControllerKind, Link, Route, Scenario, SelectionPolicy, SimConfig, Simulation,
    Source,
};
use mptcp_energy::utility::UtilityFunction;

fn single_path_source(id: &str, route: usize, controller: ControllerKind, alpha_s: f64) -> Source {
    Source {
        id: id.into(),
        routes: vec![route],
        controller,
        utility: UtilityFunction::new_reno(0.1).unwrap(),
        alpha_s,
        beta: 0.2,
        app: AppKind::Realtime { duration: 1e9 },
        selection: SelectionPolicy::Auto,
    }
}

fn free_path(id: &str) -> PathSpec {
    PathSpec::new(id, 0.0, 0.0, 1e3).unwrap()
}

#[test]
fn single_newreno_flow_fills_the_link() {
    let scenario = Scenario {
        links: vec![
            Link::new("access", 1e3),
            Link::new("bottleneck", 10.0),
        ],
        routes: vec![Route {
            id: "r0".into(),
            links: vec![0, 1],
            path: free_path("nic"),
        }],
        sources: vec![single_path_source("flow", 0, ControllerKind::SinglePath, 0.0)],
    };
    let config = SimConfig {
        conv_tol: 2e-5,
        horizon: 900.0,
        ..SimConfig::default()
    };
    let out = run(&scenario, &config).unwrap();
    assert!(out.metrics.converged);
    let x = out.metrics.per_source[0].throughput_mbps;
    assert!((x - 10.0).abs() < 0.01, "equilibrium rate {x}");

    // Primal feasibility and complementary slackness at the bottleneck.
    let last = out.trace.rows.last().unwrap();
    let p_bottleneck = last[3];
    assert!(x <= 10.0 + 1e-3 * 10.0);
    assert!(p_bottleneck * (10.0 - x) <= 1e-2, "slackness violated");
}

#[test]
fn two_identical_flows_split_evenly() {
    let scenario = Scenario {
        links: vec![Link::new("shared", 10.0)],
        routes: vec![
            Route { id: "r0".into(), links: vec![0], path: free_path("nic0") },
            Route { id: "r1".into(), links: vec![0], path: free_path("nic1") },
        ],
        sources: vec![
            single_path_source("a", 0, ControllerKind::SinglePath, 0.0),
            single_path_source("b", 1, ControllerKind::SinglePath, 0.0),
        ],
    };
    let out = run(&scenario, &SimConfig { horizon: 900.0, ..SimConfig::default() }).unwrap();
    assert!(out.metrics.converged);
    let a = out.metrics.per_source[0].throughput_mbps;
    let b = out.metrics.per_source[1].throughput_mbps;
    assert!((a - 5.0).abs() < 0.05, "flow a at {a}");
    assert!((b - 5.0).abs() < 0.05, "flow b at {b}");
    // Identical sources see identical dynamics, so the split is exact.
    assert_eq!(a, b);
}

#[test]
fn ee_realtime_equilibrium_matches_interior_rate() {
    // Uncongested single LTE-like path: the driver vanishes exactly at
    // (U')^{-1}(alpha_s b).
    let u = UtilityFunction::new_reno(0.1).unwrap();
    for i in 0..10 {
        let alpha = 0.1 + 2.0 * i as f64 / 9.0;
        let path = PathSpec::new("lte_wide", 52.0, 1288.0, 1e3).unwrap();
        let scenario = Scenario {
            links: vec![Link::new("access", 1e3)],
            routes: vec![Route { id: "r0".into(), links: vec![0], path }],
            sources: vec![Source {
                id: "flow".into(),
                routes: vec![0],
                controller: ControllerKind::EeRealtime,
                utility: u,
                alpha_s: alpha,
                beta: 0.2,
                app: AppKind::Realtime { duration: 1e9 },
                selection: SelectionPolicy::Auto,
            }],
        };
        let out = run(&scenario, &SimConfig::default()).unwrap();
        assert!(out.metrics.converged, "alpha {alpha}");
        let x = out.metrics.per_source[0].throughput_mbps;
        let expected = u.deriv_inv(alpha * 52.0);
        assert!(
            (x - expected).abs() / expected < 5e-3,
            "alpha {alpha}: {x} vs {expected}"
        );
    }
}

#[test]
fn ee_file_transfer_pins_its_single_path_at_capacity() {
    // On one path the energy-per-bit gradient is -theta/X^2 < 0: pushing
    // rate up always helps, so the access link saturates at 12.74.
    for alpha in [0.5, 2.0, 5.0] {
        let scenario = Scenario {
            links: vec![Link::new("lte", 12.74).with_gain(4.0)],
            routes: vec![Route {
                id: "r0".into(),
                links: vec![0],
                path: PathSpec::lte(),
            }],
            sources: vec![Source {
                id: "dl".into(),
                routes: vec![0],
                controller: ControllerKind::EeFileTransfer,
                utility: UtilityFunction::new_reno(0.1).unwrap(),
                alpha_s: alpha,
                beta: 0.2,
                app: AppKind::Realtime { duration: 1e9 },
                selection: SelectionPolicy::Auto,
            }],
        };
        let config = SimConfig { dt: 5e-5, horizon: 60.0, ..SimConfig::default() };
        let out = run(&scenario, &config).unwrap();
        assert!(out.metrics.converged, "alpha {alpha}");
        let x = out.metrics.per_source[0].throughput_mbps;
        assert!((x - 12.74).abs() < 0.05, "alpha {alpha}: rate {x}");
    }
}

#[test]
fn empty_network_prices_decay_to_zero() {
    let scenario = Scenario {
        links: vec![Link::new("idle", 5.0)],
        routes: vec![],
        sources: vec![],
    };
    let mut sim = Simulation::new(scenario, SimConfig::default()).unwrap();
    sim.state.p[0] = 3.0;
    for _ in 0..40_000 {
        sim.step().unwrap();
    }
    assert!(sim.state.p[0] < 3.0 * 0.01, "price did not decay: {}", sim.state.p[0]);
    let frozen = sim.state.p[0];
    for _ in 0..100 {
        sim.step().unwrap();
    }
    assert!(sim.state.p[0] <= frozen);
}

#[test]
fn traces_are_bit_identical_across_runs() {
    let scenario = Scenario {
        links: vec![Link::new("shared", 10.0)],
        routes: vec![
            Route { id: "r0".into(), links: vec![0], path: PathSpec::wifi() },
            Route { id: "r1".into(), links: vec![0], path: PathSpec::lte() },
        ],
        sources: vec![Source {
            id: "flow".into(),
            routes: vec![0, 1],
            controller: ControllerKind::EeFileTransfer,
            utility: UtilityFunction::new_reno(0.05).unwrap(),
            alpha_s: 1.0,
            beta: 0.2,
            app: AppKind::FileTransfer { size: 200.0 },
            selection: SelectionPolicy::Auto,
        }],
    };
    let config = SimConfig { dt: 2e-4, horizon: 60.0, ..SimConfig::default() };
    let a = run(&scenario, &config).unwrap();
    let b = run(&scenario, &config).unwrap();
    assert_eq!(a.trace.to_csv(), b.trace.to_csv());
    assert_eq!(
        a.metrics.per_source[0].completion_time,
        b.metrics.per_source[0].completion_time
    );
}

#[test]
fn simulator_selection_matches_the_solvers() {
    use mptcp_energy::select::{solve_psp1_two_path, solve_psp2, Instance};
    let u = UtilityFunction::new_reno(0.1).unwrap();
    for (controller, alpha) in [
        (ControllerKind::EeRealtime, 0.02),
        (ControllerKind::EeRealtime, 5.0),
        (ControllerKind::EeFileTransfer, 0.05),
        (ControllerKind::EeFileTransfer, 5.0),
    ] {
        let scenario = Scenario {
            links: vec![Link::new("wifi", 4.12), Link::new("lte", 12.74)],
            routes: vec![
                Route { id: "over_wifi".into(), links: vec![0], path: PathSpec::wifi() },
                Route { id: "over_lte".into(), links: vec![1], path: PathSpec::lte() },
            ],
            sources: vec![Source {
                id: "flow".into(),
                routes: vec![0, 1],
                controller,
                utility: u,
                alpha_s: alpha,
                beta: 0.2,
                app: AppKind::Realtime { duration: 1e9 },
                selection: SelectionPolicy::Auto,
            }],
        };
        let sim = Simulation::new(scenario, SimConfig { dt: 5e-5, ..SimConfig::default() }).unwrap();
        let mut paths = vec![PathSpec::wifi(), PathSpec::lte()];
        paths[0].id = "over_wifi".into();
        paths[1].id = "over_lte".into();
        let inst = Instance::new(paths, u, alpha).unwrap();
        let expected = match controller {
            ControllerKind::EeRealtime => solve_psp1_two_path(&inst).unwrap().chosen,
            _ => solve_psp2(&inst).unwrap().chosen,
        };
        assert_eq!(sim.selected_route_ids(0), expected.as_slice());
    }
}

#[test]
fn regulation_never_below_one_minus_beta_along_a_run() {
    let scenario = Scenario {
        links: vec![Link::new("shared", 10.0)],
        routes: vec![
            Route { id: "r0".into(), links: vec![0], path: free_path("n0") },
            Route { id: "r1".into(), links: vec![0], path: free_path("n1") },
        ],
        sources: vec![Source {
            id: "flow".into(),
            routes: vec![0, 1],
            controller: ControllerKind::RegularMptcp,
            utility: UtilityFunction::new_reno(0.1).unwrap(),
            alpha_s: 0.0,
            beta: 0.2,
            app: AppKind::Realtime { duration: 1e9 },
            selection: SelectionPolicy::Auto,
        }],
    };
    let mut sim = Simulation::new(scenario, SimConfig::default()).unwrap();
    for _ in 0..20_000 {
        sim.step().unwrap();
        let x0 = sim.state.x[0];
        let x1 = sim.state.x[1];
        let x_max = x0.max(x1);
        for x in [x0, x1] {
            let f = mptcp_energy::sim::dynamics::regulation(0.2, x, x_max);
            assert!(f >= 0.8 - 1e-12);
            if x == x_max {
                assert!((f - 1.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn nonnegativity_preserved_under_stress() {
    // High weight pushes rates hard toward zero; the floor must hold.
    let scenario = Scenario {
        links: vec![Link::new("wifi", 4.12), Link::new("lte", 12.74)],
        routes: vec![
            Route { id: "r0".into(), links: vec![0], path: PathSpec::wifi() },
            Route { id: "r1".into(), links: vec![1], path: PathSpec::lte() },
        ],
        sources: vec![Source {
            id: "flow".into(),
            routes: vec![0, 1],
            controller: ControllerKind::EeRealtime,
            utility: UtilityFunction::new_reno(0.1).unwrap(),
            alpha_s: 100.0,
            beta: 0.2,
            app: AppKind::Realtime { duration: 1e9 },
            selection: SelectionPolicy::Fixed(vec!["r0".into(), "r1".into()]),
        }],
    };
    let mut sim = Simulation::new(scenario, SimConfig::default()).unwrap();
    for _ in 0..50_000 {
        sim.step().unwrap();
        for &x in &sim.state.x {
            assert!(x >= 1e-6 - 1e-18);
        }
        for &p in &sim.state.p {
            assert!(p >= 0.0);
        }
    }
}

#[test]
fn file_source_departs_and_frees_the_link() {
    let scenario = Scenario {
        links: vec![Link::new("shared", 10.0).with_gain(0.5)],
        routes: vec![
            Route { id: "file".into(), links: vec![0], path: free_path("n0") },
            Route { id: "bg".into(), links: vec![0], path: free_path("n1") },
        ],
        sources: vec![
            Source {
                id: "dl".into(),
                routes: vec![0],
                controller: ControllerKind::SinglePath,
                utility: UtilityFunction::new_reno(0.1).unwrap(),
                alpha_s: 0.0,
                beta: 0.2,
                app: AppKind::FileTransfer { size: 100.0 },
                selection: SelectionPolicy::Auto,
            },
            single_path_source("bg", 1, ControllerKind::SinglePath, 0.0),
        ],
    };
    let config = SimConfig { horizon: 300.0, ..SimConfig::default() };
    let out = run(&scenario, &config).unwrap();
    let dl = &out.metrics.per_source[0];
    let completion = dl.completion_time.expect("file must complete");
    // Two even flows on 10 Mbps: 100 Mbit take roughly 20 s plus transient.
    assert!(completion > 15.0 && completion < 40.0, "completion {completion}");
    assert_eq!(out.events.len(), 1);
    assert!((out.events[0].t - completion).abs() < 1e-9);
    // Background flow later expands toward the full link.
    let bg = &out.metrics.per_source[1];
    assert!(bg.throughput_mbps > 9.0, "bg at {}", bg.throughput_mbps);
}

#[test]
fn feasibility_and_slackness_at_convergence() {
    // Two flows on one link plus an uncongested side link: at convergence
    // every link satisfies y <= c (within 0.1% of capacity) and carries no
    // price unless it is saturated.
    let scenario = Scenario {
        links: vec![
            Link::new("shared", 10.0).with_gain(0.5),
            Link::new("side", 50.0).with_gain(0.1),
        ],
        routes: vec![
            Route { id: "r0".into(), links: vec![0], path: free_path("n0") },
            Route { id: "r1".into(), links: vec![0, 1], path: free_path("n1") },
        ],
        sources: vec![
            single_path_source("a", 0, ControllerKind::SinglePath, 0.0),
            single_path_source("b", 1, ControllerKind::SinglePath, 0.0),
        ],
    };
    let config = SimConfig { conv_tol: 2e-5, horizon: 600.0, ..SimConfig::default() };
    let out = run(&scenario, &config).unwrap();
    assert!(out.metrics.converged);

    let last = out.trace.rows.last().unwrap();
    // Columns: t, x_r0, x_r1, p_shared, p_side
    let (x0, x1, p_shared, p_side) = (last[1], last[2], last[3], last[4]);
    let y_shared = x0 + x1;
    assert!(y_shared <= 10.0 * 1.001, "shared link overloaded: {y_shared}");
    assert!(x1 <= 50.0 * 1.001);
    assert!(p_shared * (10.0 - y_shared) <= 1e-2, "slackness on shared");
    assert!(p_side * (50.0 - x1) <= 1e-2, "side link must stay free: p={p_side}");
    assert!(p_side < 1e-6);
}

#[test]
fn duplicate_ids_are_rejected() {
    let scenario = Scenario {
        links: vec![Link::new("l", 10.0), Link::new("l", 5.0)],
        routes: vec![],
        sources: vec![],
    };
    assert!(scenario.validate().is_err());
}

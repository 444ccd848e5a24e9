//! Command-line front end: solve path-selection instances, run fluid
//! simulations, sweep tradeoff weights, and re-run the prebuilt experiments.
//!
//! Exit codes: 0 success, 2 configuration error, 3 non-convergence,
//! 4 numerical error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mptcp_energy::experiments::{self, rows_to_csv};
use mptcp_energy::scenario::ConfigFile;
use mptcp_energy::select::{
    sample_instance, solve_psp1_bruteforce, solve_psp1_greedy, solve_psp2, solve_psp2_bruteforce,
    Instance, SelectionResult,
};
use mptcp_energy::sim;
use mptcp_energy::{fmt_sig, Error};

#[derive(Parser)]
#[command(
    name = "mptcp-energy",
    about = "Energy-aware multipath TCP: path selection and fluid-model simulation",
    version
)]
struct Cli {
    /// Suppress progress and warning output on stderr.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a path-selection instance from a config (or a seeded random one).
    Select {
        /// JSON scenario file; its `paths` plus `selection` section form the instance.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Generate a random instance from this seed instead of a config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "psp1")]
        problem: Problem,
        /// Also run the exhaustive oracle and print the observed gap.
        #[arg(long)]
        oracle: bool,
    },
    /// Integrate a scenario's fluid dynamics and print its metrics.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Directory for the trace CSV and metrics JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run a simulation per sweep alpha, overriding every source's weight.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named prebuilt experiment and write its CSV + JSON summary.
    Reproduce {
        /// One of: bottleneck-energy, tradeoff-realtime, tradeoff-filetransfer,
        /// friendliness, two-apps.
        name: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Problem {
    /// Realtime: utility minus weighted instantaneous power.
    Psp1,
    /// File transfer: utility minus weighted energy per bit.
    Psp2,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::NonConvergence { .. } => 3,
        Error::NumericalBlowup { .. } => 4,
        _ => 2,
    }
}

fn dispatch(cli: &Cli) -> Result<ExitCode, Error> {
    match &cli.command {
        Command::Select {
            config,
            seed,
            problem,
            oracle,
        } => cmd_select(config.as_deref(), *seed, *problem, *oracle),
        Command::Simulate { config, out } => cmd_simulate(config, out.as_deref(), cli.quiet),
        Command::Sweep { config, out } => cmd_sweep(config, out.as_deref(), cli.quiet),
        Command::Reproduce { name, out } => cmd_reproduce(name, out, cli.quiet),
    }
}

fn load_config(path: &Path) -> Result<ConfigFile, Error> {
    let text = fs::read_to_string(path)?;
    ConfigFile::from_json(&text)
}

fn print_selection(label: &str, inst: &Instance, res: &SelectionResult) {
    println!("{label}:");
    println!("  chosen: [{}]", res.chosen.join(", "));
    for (id, rate) in res.rates.iter() {
        println!("  rate {id}: {} Mbps", fmt_sig(rate));
    }
    println!("  aggregate: {} Mbps", fmt_sig(res.aggregate_rate()));
    println!("  power: {} mW", fmt_sig(res.total_power(&inst.paths)));
    println!("  objective: {}", fmt_sig(res.objective));
    println!("  upper bound: {}", fmt_sig(res.upper_bound));
    println!("  gap certificate: {}", fmt_sig(res.gap_certificate));
    for w in &res.warnings {
        println!("  warning: {w}");
    }
}

fn cmd_select(
    config: Option<&Path>,
    seed: Option<u64>,
    problem: Problem,
    oracle: bool,
) -> Result<ExitCode, Error> {
    let mut inst = match (config, seed) {
        (Some(path), _) => load_config(path)?.to_instance()?,
        (None, Some(seed)) => sample_instance(seed, 8),
        (None, None) => {
            return Err(Error::Config {
                field: "--config".into(),
                message: "select needs --config or --seed".into(),
            })
        }
    };
    if inst.n_connections > 1 {
        inst = inst.scale_for_n_connections();
    }

    let res = match problem {
        Problem::Psp1 => solve_psp1_greedy(&inst)?,
        Problem::Psp2 => solve_psp2(&inst)?,
    };
    print_selection("solution", &inst, &res);

    if oracle {
        let exact = match problem {
            Problem::Psp1 => solve_psp1_bruteforce(&inst)?,
            Problem::Psp2 => solve_psp2_bruteforce(&inst)?,
        };
        print_selection("oracle", &inst, &exact);
        println!(
            "observed gap: {} (certificate {})",
            fmt_sig(exact.objective - res.objective),
            fmt_sig(res.gap_certificate)
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn write_if(out: Option<&Path>, name: &str, contents: &str) -> Result<(), Error> {
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(name), contents)?;
    }
    Ok(())
}

fn cmd_simulate(config: &Path, out: Option<&Path>, quiet: bool) -> Result<ExitCode, Error> {
    let cfg = load_config(config)?;
    let (scenario, sim_config) = cfg.to_scenario()?;
    let run = sim::run(&scenario, &sim_config)?;
    if !quiet {
        for w in &run.metrics.warnings {
            eprintln!("warning: {w}");
        }
    }
    println!("{}", serde_json::to_string_pretty(&run.metrics)?);
    write_if(out, "trace.csv", &run.trace.to_csv())?;
    write_if(out, "metrics.json", &serde_json::to_string_pretty(&run.metrics)?)?;
    if run.metrics.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(3))
    }
}

fn cmd_sweep(config: &Path, out: Option<&Path>, quiet: bool) -> Result<ExitCode, Error> {
    let cfg = load_config(config)?;
    let alphas = cfg.sweep_alphas()?.to_vec();
    let (scenario, sim_config) = cfg.to_scenario()?;

    let mut rows = Vec::new();
    let mut all_converged = true;
    for &alpha in &alphas {
        let mut point = scenario.clone();
        for source in &mut point.sources {
            source.alpha_s = alpha;
        }
        let run = sim::run(&point, &sim_config)?;
        all_converged &= run.metrics.converged;
        if !quiet {
            for w in &run.metrics.warnings {
                eprintln!("warning (alpha {alpha}): {w}");
            }
        }
        for sm in &run.metrics.per_source {
            rows.push(experiments::MetricsRow {
                scenario: "sweep".into(),
                alpha_s: alpha,
                source: sm.id.clone(),
                controller: String::new(),
                chosen: sm.selected_routes.join("+"),
                throughput_mbps: sm.throughput_mbps,
                power_mw: sm.power_mw,
                energy_per_bit: sm.energy_per_bit,
                energy_j: sm.energy_j,
                completion_s: sm.completion_time,
                converged: run.metrics.converged,
            });
        }
    }
    let csv = rows_to_csv(&rows);
    print!("{csv}");
    write_if(out, "sweep.csv", &csv)?;
    if all_converged {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(3))
    }
}

fn cmd_reproduce(name: &str, out: &Path, quiet: bool) -> Result<ExitCode, Error> {
    let result = experiments::by_name(name)?;
    let csv = rows_to_csv(&result.rows);
    fs::create_dir_all(out)?;
    fs::write(out.join(format!("{}-metrics.csv", result.name)), &csv)?;
    fs::write(
        out.join(format!("{}-summary.json", result.name)),
        serde_json::to_string_pretty(&result.summary)?,
    )?;
    if !quiet {
        eprintln!(
            "wrote {}-metrics.csv and {}-summary.json",
            result.name, result.name
        );
    }
    println!("{}", serde_json::to_string_pretty(&result.summary)?);
    if result.all_converged {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(3))
    }
}

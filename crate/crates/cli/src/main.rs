//! Experiment harness around the transport-network energy library:
//! assumption checks, single solves, energy minimization, adaptation
//! dynamics, the nonlocal Poisson equation, and convergence sweeps, all
//! driven by one scenario file.
//!
//! Exit codes: 0 success, 1 assumption or convergence failure, 2 usage or
//! parse error.

mod commands;
mod output;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use graphonflux_core::Error;

use commands::SweepMode;
use scenario::Scenario;

#[derive(Parser)]
#[command(
    name = "graphonflux",
    version,
    about = "Transport-network energies on dense graphs and their graphon limits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Override the scenario's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Verify the structural assumptions of a scenario.
    Check {
        #[command(flatten)]
        common: Common,
    },
    /// Solve the node balance at one size and write pressures.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
    },
    /// Evaluate the energy of a conductivity matrix.
    Energy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
        /// Dense CSV grid of conductivities (defaults to the projected
        /// scenario kernel).
        #[arg(long)]
        b: Option<PathBuf>,
    },
    /// Minimize the energy at one size and write the conductivities.
    Minimize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
    },
    /// Integrate the conductivity adaptation dynamics.
    Flow {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.05)]
        dt: f64,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        /// Starting conductivities as a dense CSV grid.
        #[arg(long)]
        b: Option<PathBuf>,
    },
    /// Solve the nonlocal diffusion equation at one resolution.
    Poisson {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        m: usize,
    },
    /// Recovery-sequence convergence sweep.
    SweepGamma {
        #[command(flatten)]
        common: Common,
        /// Parallel rows (defaults to GRAPHONFLUX_JOBS, then 1).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Minimizer convergence sweep.
    SweepMinimizer {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn jobs_or_default(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("GRAPHONFLUX_JOBS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(1)
    .max(1)
}

fn load(common: &Common) -> Result<(Scenario, PathBuf), Error> {
    let mut scenario = Scenario::load(&common.scenario)?;
    if let Some(seed) = common.seed {
        scenario.seed = seed;
    }
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| scenario.output_dir.clone());
    Ok((scenario, out))
}

fn run() -> Result<i32, Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Check { common } => {
            let (scenario, out) = load(&common)?;
            commands::cmd_check(&scenario, &out)
        }
        Command::Solve { common, n } => {
            let (scenario, out) = load(&common)?;
            commands::cmd_solve(&scenario, n, &out)
        }
        Command::Energy { common, n, b } => {
            let (scenario, out) = load(&common)?;
            commands::cmd_energy(&scenario, n, b.as_deref(), &out)
        }
        Command::Minimize { common, n } => {
            let (scenario, out) = load(&common)?;
            commands::cmd_minimize(&scenario, n, &out)
        }
        Command::Flow {
            common,
            n,
            dt,
            steps,
            b,
        } => {
            let (scenario, out) = load(&common)?;
            commands::cmd_flow(&scenario, n, dt, steps, b.as_deref(), &out)
        }
        Command::Poisson { common, m } => {
            let (scenario, out) = load(&common)?;
            commands::cmd_poisson(&scenario, m, &out)
        }
        Command::SweepGamma { common, jobs } => {
            let (scenario, out) = load(&common)?;
            commands::cmd_sweep(&scenario, SweepMode::Gamma, jobs_or_default(jobs), &out)
        }
        Command::SweepMinimizer { common, jobs } => {
            let (scenario, out) = load(&common)?;
            commands::cmd_sweep(&scenario, SweepMode::Minimizer, jobs_or_default(jobs), &out)
        }
    }
}

/// Parse and input-shape problems are usage errors (2); everything the
/// math rejects at runtime is a failure of the experiment (1).
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::Json(_) | Error::InvalidDescriptor(_) | Error::Shape(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

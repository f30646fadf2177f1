//! `crestfall` — pseudo-spectral shallow-water / Boussinesq runs with
//! blow-up diagnostics.
//!
//! Exit codes: 0 completed, 2 configuration error, 10 blow-up detected,
//! 20 solver error.

mod config;
mod output;
mod runner;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{FlatConfig, RunConfig};
use runner::{run_reduce, run_scenario, run_simulate, RunError, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "crestfall", version, about = "Dispersive shallow-water models on the circle with blow-up instrumentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a PDE model and emit CSV series plus a manifest.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Integrate the pointwise jet ODE system only.
    Reduce {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run an orchestrated experiment: theorem2 | theorem3 | dryspot.
    Scenario {
        name: String,
        #[arg(long)]
        config: PathBuf,
    },
    /// Cartesian parameter sweep executed in parallel.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads (overrides sweep.workers; default: rayon's choice).
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn load(path: &PathBuf) -> Result<(FlatConfig, RunConfig), RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::config(format!("cannot read config {}: {e}", path.display())))?;
    let mut flat = FlatConfig::parse(&text).map_err(RunError::config)?;
    flat.apply_env(std::env::vars());
    let cfg = RunConfig::from_flat(&flat).map_err(RunError::config)?;
    for w in cfg.model.warnings() {
        eprintln!("warning: {w}");
    }
    Ok((flat, cfg))
}

fn dispatch(cli: Cli) -> Result<i32, RunError> {
    match cli.command {
        Command::Simulate { config } => {
            let (_, cfg) = load(&config)?;
            run_simulate(&cfg)
        }
        Command::Reduce { config } => {
            let (_, cfg) = load(&config)?;
            run_reduce(&cfg)
        }
        Command::Scenario { name, config } => {
            let (_, cfg) = load(&config)?;
            run_scenario(&cfg, &name)
        }
        Command::Sweep { config, workers } => {
            let (flat, cfg) = load(&config)?;
            sweep::run_sweep(&flat, &cfg, workers)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(if e.exit_code == 0 { EXIT_CONFIG as u8 } else { e.exit_code as u8 })
        }
    }
}

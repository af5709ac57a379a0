//! Experiment runner: space verification, condition estimation, solves with
//! diagnostics, and parameter sweeps, all driven by one flat key-value
//! config (see `print-config` for the schema).

mod artifacts;
mod commands;
mod config;
mod setup;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "nashmoser",
    about = "Smoothed Newton iteration on truncated graded spaces: verification and experiments",
    version
)]
struct Cli {
    /// Key-value config file; defaults apply for absent keys
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override one config key (repeatable), e.g. --set problem.n=64
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the smoothing, rough-part, and interpolation inequalities on
    /// seeded samples
    VerifySpace,
    /// Estimate the seven condition constants of the configured problem
    VerifyProblem,
    /// Run one solve and fit the trace against the predicted bounds
    Solve,
    /// Cartesian sweep over epsilon, amplitude, and tau grids
    Sweep,
    /// Print the full config schema with current values
    PrintConfig,
}

fn run(cli: &Cli) -> Result<i32, String> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply_overrides(&cli.set)?;
    match cli.command {
        Command::VerifySpace => commands::verify_space(&cfg),
        Command::VerifyProblem => commands::verify_problem(&cfg),
        Command::Solve => commands::solve_cmd(&cfg),
        Command::Sweep => commands::sweep(&cfg),
        Command::PrintConfig => commands::print_config(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

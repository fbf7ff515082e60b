//! Command-line front end for the two-step sparse regression library.
//!
//! Exit codes: 0 on success, 2 for bad input (unreadable files, dimension or
//! config errors), 3 when a numerical routine fails.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod configs;
pub mod diagnose;
pub mod expand;
pub mod fit;
pub mod output;
pub mod simulate;
pub mod sweep;

pub use configs::Target;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<twostep::Error> for CliError {
    fn from(e: twostep::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "twostep", version, about = "Two-step sparse regression and sign-recovery experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one procedure to a design and response and report the solution.
    Fit(fit::FitArgs),
    /// Run a Monte Carlo experiment (or an array of them) from a JSON config.
    Simulate(simulate::SimulateArgs),
    /// Irrepresentability and identifiability diagnostics of a design.
    Diagnose(diagnose::DiagnoseArgs),
    /// Second-order polynomial expansion of a design.
    ExpandFeatures(expand::ExpandArgs),
    /// Test error against model size over random train/test splits.
    Sweep(sweep::SweepArgs),
    /// Run a bundled experiment and write its table or plot data.
    Reproduce(simulate::ReproduceArgs),
}

/// Worker count from the environment, 0 meaning all available cores.
pub const WORKERS_ENV: &str = "TWOSTEP_WORKERS";

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Fit(a) => fit::run(&a),
        Command::Simulate(a) => simulate::run_simulate(&a),
        Command::Diagnose(a) => diagnose::run(&a),
        Command::ExpandFeatures(a) => expand::run(&a),
        Command::Sweep(a) => sweep::run(&a),
        Command::Reproduce(a) => simulate::run_reproduce(&a),
    }
}

fn read_text(path: &PathBuf) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

//! Command-line front end for skeleton estimation on Gaussian data.
//!
//! Four subcommands cover the full workflow: `estimate` recovers an
//! undirected skeleton from a dataset CSV, `simulate` draws a random DAG and
//! samples observations from its linear model, `benchmark` runs replicated
//! recovery experiments over a parameter grid, and `oracle` reconstructs a
//! skeleton from a known weight matrix using exact independence answers.
//!
//! Exit codes are fixed for scripting: 0 success, 2 unreadable or malformed
//! input, 3 data that parses but cannot support estimation, 4 parameter out
//! of range. Every subcommand is deterministic given its flags; repeated
//! runs produce byte-identical data outputs.

mod commands;
mod input;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{BenchmarkArgs, EstimateArgs, OracleArgs, SimulateArgs};

#[derive(Parser)]
#[command(
    name = "pcskel",
    version,
    about = "Skeleton estimation for sparse Gaussian DAG models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate an undirected skeleton from observational data
    Estimate(EstimateArgs),
    /// Generate a random DAG and Gaussian samples from its linear model
    Simulate(SimulateArgs),
    /// Run replicated recovery benchmarks over a parameter grid
    Benchmark(BenchmarkArgs),
    /// Recover a skeleton from a known weight matrix via exact tests
    Oracle(OracleArgs),
}

/// Failure category; the variant fixes the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed input (exit 2).
    Input(String),
    /// Input parsed, but the data cannot support estimation (exit 3).
    Data(String),
    /// A parameter is out of range (exit 4).
    Param(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Data(_) => 3,
            CliError::Param(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Data(m) | CliError::Param(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Estimate(args) => commands::estimate(&args),
        Command::Simulate(args) => commands::simulate(&args),
        Command::Benchmark(args) => commands::benchmark(&args),
        Command::Oracle(args) => commands::oracle(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("pcskel: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}

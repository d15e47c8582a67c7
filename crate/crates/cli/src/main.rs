//! Command-line driver for the light-front boson simulations.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::ScanRange;
use crate::config::{CommonArgs, RunConfig, UsageError};

#[derive(Parser)]
#[command(name = "lfboson", version, about = "DLCQ (φ⁴)₂ spectra, walk block encodings and Krylov diagonalization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact diagonalization per parity sector
    Spectrum {
        #[command(flatten)]
        common: CommonArgs,
        /// Also print the Hamiltonian matrix
        #[arg(long)]
        matrix: bool,
    },
    /// Krylov diagonalization from simulated Chebyshev moments
    Qksd {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Check the block encoding and Chebyshev circuits against the oracle
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Highest Chebyshev order checked
        #[arg(long, default_value_t = 8)]
        max_order: usize,
        #[arg(long, hide = true)]
        corrupt_monomial: Option<usize>,
    },
    /// Lowest eigenvalue over a coupling range and the critical coupling
    Scan {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        lo: f64,
        #[arg(long)]
        hi: f64,
        #[arg(long, default_value_t = 11)]
        points: usize,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Spectrum { common, matrix } => commands::spectrum(&RunConfig::resolve(&common)?, matrix),
        Command::Qksd { common } => commands::qksd(&RunConfig::resolve(&common)?),
        Command::Verify { common, max_order, corrupt_monomial } => {
            commands::verify(&RunConfig::resolve(&common)?, corrupt_monomial, max_order)
        }
        Command::Scan { common, lo, hi, points, tol } => {
            commands::scan(&RunConfig::resolve(&common)?, &ScanRange { lo, hi, points, tol })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

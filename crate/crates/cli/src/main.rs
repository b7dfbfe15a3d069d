//! `qcsim`: reproducible runs over the lattice simulator.
//!
//! Every run writes its CSV/JSON outputs and a `manifest.json` into the
//! output directory. Exit codes: 0 success, 2 invalid input, 3 solver
//! non-convergence, 1 anything else (I/O).

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] qcsim_core::Error),
    #[error("{0}")]
    NotConverged(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_convergence_failure() => 3,
            CliError::Core(qcsim_core::Error::Io(_)) => 1,
            CliError::Core(_) => 2,
            CliError::NotConverged(_) => 3,
            CliError::Io(_) | CliError::Other(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qcsim", version, about = "Lattice electronic-structure and mediated-interaction runs")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Plain-text `key = value` file; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [default: $QCSIM_OUT/<subcommand>, else runs/<subcommand>].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for concurrent solver jobs.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Also write a gnuplot script next to the data.
    #[arg(long, global = true)]
    pub plot: bool,
    /// Eigensolver residual tolerance (`solver.tol`).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Eigensolver iteration cap (`solver.max_iter`).
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    /// Start-vector seed (`solver.seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Hydrogen spectrum against t_f/v0.
    HydrogenSpectrum(commands::HydrogenArgs),
    /// Fitted Bohr radius against t_f/v0.
    BohrFit(commands::BohrArgs),
    /// Mediated two-fermion interaction curve.
    MediatorCurve(commands::MediatorCurveArgs),
    /// Validity conditions for a mediator configuration.
    CheckConditions(commands::CheckArgs),
    /// H2 potential-energy curve.
    H2Curve(commands::H2Args),
    /// H2 curves with the repulsion scaled by F.
    PseudoCurve(commands::PseudoArgs),
    /// Ratio where finite-size error overtakes discretization error.
    CriticalRatio(commands::CriticalArgs),
    /// Ground-state density field of one or two nuclei.
    ExportDensity(commands::DensityArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::HydrogenSpectrum(_) => "hydrogen-spectrum",
            Command::BohrFit(_) => "bohr-fit",
            Command::MediatorCurve(_) => "mediator-curve",
            Command::CheckConditions(_) => "check-conditions",
            Command::H2Curve(_) => "h2-curve",
            Command::PseudoCurve(_) => "pseudo-curve",
            Command::CriticalRatio(_) => "critical-ratio",
            Command::ExportDensity(_) => "export-density",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(manifest) => {
            println!("wrote {}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

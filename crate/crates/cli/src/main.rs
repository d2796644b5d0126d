//! `regenline`: BER curves, coefficient-law sweeps, phase-space grids and
//! self-validation for chains of Kerr phase-sensitive regenerators.

mod commands;
mod config;
mod error;
mod output;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;
use crate::output::Format;

#[derive(Parser, Debug)]
#[command(name = "regenline", version, about = "Kerr regenerator chain simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// `key = value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output format, csv or json.
    #[arg(long, global = true)]
    pub format: Option<Format>,
    /// Output file (default: stdout). A `<out>.manifest.json` is written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Write results even when the truncation deficit is not negligible.
    #[arg(long, global = true)]
    pub allow_truncation_risk: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bit-error rate after each of N repeaters.
    BerCurve(commands::BerCurveArgs),
    /// Linear-regime coefficients over several input levels and their log-linear law.
    SweepFit(commands::SweepFitArgs),
    /// Wigner function of the regenerated state on a grid.
    Wigner(commands::WignerArgs),
    /// Check the kernel model against the density-matrix oracle.
    Validate(validate::ValidateArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("regenline: {e}");
            e.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::BerCurve(a) => commands::ber_curve(a),
        Command::SweepFit(a) => commands::sweep_fit(a),
        Command::Wigner(a) => commands::wigner(a),
        Command::Validate(a) => validate::run(a),
    }
}

/// Configure the global worker pool once per process.
pub fn init_threads(threads: Option<usize>) -> Result<(), CliError> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Runtime(e.into()))?;
    Ok(())
}

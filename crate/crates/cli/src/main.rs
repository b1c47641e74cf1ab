//! Command-line driver for the discrete de Rham toolkit.
//!
//! The binary groups its work into small, scriptable reports: mesh fixture
//! generation, mesh validation, Betti numbers, cochain-lift identities,
//! discrete-complex residual checks, Poincaré-constant sweeps, and
//! chart-level scaling exponents.  Every report that consumes randomness
//! resolves its seed the same way (`--seed` flag, then the `FORMDECK_SEED`
//! environment variable, then the library default), and all tabular output
//! is written in a fixed order so repeated runs produce identical bytes.
//!
//! Exit codes: 0 on success, 2 when a mesh file cannot be parsed, 3 when a
//! mesh invariant or a report threshold is violated, 64 for usage errors,
//! and 1 for other I/O failures.

mod checks;
mod families;
mod scalings;
mod sweep;

use std::path::{Path, PathBuf};
use std::process::exit;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use formdeck_core::mesh::Mesh;
use formdeck_core::Error;

/// Exit code for mesh files that fail to parse.
const EXIT_PARSE: i32 = 2;
/// Exit code for violated invariants and failed report thresholds.
const EXIT_CHECK: i32 = 3;
/// Exit code for command-line usage errors.
const EXIT_USAGE: i32 = 64;

#[derive(Parser)]
#[command(name = "formdeck", version, about = "Polytopal discrete de Rham toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate mesh fixture files for a refinement family.
    Gen(families::GenArgs),
    /// Validate a mesh file and print a one-line summary.
    Validate {
        /// Mesh file (JSON).
        mesh: PathBuf,
    },
    /// Topological reports.
    #[command(subcommand)]
    Topology(TopologyCommand),
    /// Polytopal/simplicial cochain lift reports.
    #[command(subcommand)]
    Lift(LiftCommand),
    /// Discrete de Rham complex reports.
    #[command(subcommand)]
    Ddr(DdrCommand),
    /// Poincaré-constant laboratory.
    #[command(subcommand)]
    Poincare(PoincareCommand),
    /// Fit scaling exponents of the chart constants under dilation.
    AppendixScalings(scalings::ScalingArgs),
}

#[derive(Subcommand)]
enum TopologyCommand {
    /// Print Betti numbers per degree as CSV.
    Betti {
        /// Mesh file (JSON).
        mesh: PathBuf,
    },
}

#[derive(Subcommand)]
enum LiftCommand {
    /// Check the lift/restriction identities at matrix level.
    Check {
        /// Mesh file (JSON).
        mesh: PathBuf,
    },
}

#[derive(Subcommand)]
enum DdrCommand {
    /// Check differential and potential residuals on random inputs.
    Check(checks::DdrCheckArgs),
}

#[derive(Subcommand)]
enum PoincareCommand {
    /// Measure Poincaré constants across a refinement sweep.
    Sweep(sweep::SweepArgs),
}

/// A command failure carrying the process exit code to report.
pub struct Failure {
    code: i32,
    message: String,
}

/// Shorthand for building a [`Failure`].
pub fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

/// Result type used by all subcommand runners.
pub type CmdResult = Result<(), Failure>;

/// Maps a core-library error to the exit code contract: parse and I/O
/// problems while reading a mesh file are code 2, everything else
/// (violated invariants, solver failures) is code 3.
pub fn load_mesh(path: &Path) -> Result<Mesh, Failure> {
    Mesh::from_path(path).map_err(|err| {
        let code = match err {
            Error::Parse(_) | Error::Io(_) | Error::Json(_) => EXIT_PARSE,
            _ => EXIT_CHECK,
        };
        fail(code, format!("{}: {err}", path.display()))
    })
}

/// Wraps a core-library error from a computation (not a file load) as a
/// check failure.
pub fn check_err(err: Error) -> Failure {
    fail(EXIT_CHECK, err.to_string())
}

/// Wraps an output I/O error.
pub fn io_err(context: &str, err: std::io::Error) -> Failure {
    fail(1, format!("{context}: {err}"))
}

/// Resolves the random seed: explicit flag, then `FORMDECK_SEED`, then the
/// library default.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64, Failure> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("FORMDECK_SEED") {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| fail(EXIT_USAGE, format!("FORMDECK_SEED is not an integer: {text:?}"))),
        Err(std::env::VarError::NotPresent) => Ok(formdeck_core::DEFAULT_SEED),
        Err(err) => Err(fail(EXIT_USAGE, format!("FORMDECK_SEED: {err}"))),
    }
}

/// Formats a float for tabular output with a fixed number of digits, so
/// repeated runs agree byte for byte.  Infinities print as `inf`/`-inf`.
pub fn sci(x: f64) -> String {
    format!("{x:.12e}")
}

/// Formats an optional float, printing absent values as the empty string.
pub fn sci_opt(x: Option<f64>) -> String {
    x.map(sci).unwrap_or_default()
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            // Help and version go to stdout, usage errors to stderr.
            err.print().ok();
            exit(code);
        }
    };

    let outcome = match cli.command {
        Command::Gen(args) => families::run(&args),
        Command::Validate { mesh } => checks::validate(&mesh),
        Command::Topology(TopologyCommand::Betti { mesh }) => checks::betti(&mesh),
        Command::Lift(LiftCommand::Check { mesh }) => checks::lift_check(&mesh),
        Command::Ddr(DdrCommand::Check(args)) => checks::ddr_check(&args),
        Command::Poincare(PoincareCommand::Sweep(args)) => sweep::run(&args),
        Command::AppendixScalings(args) => scalings::run(&args),
    };

    if let Err(failure) = outcome {
        eprintln!("formdeck: {}", failure.message);
        exit(failure.code);
    }
}

//! Command-line front end: document formats and subcommands.
//!
//! Exit codes: 0 verified, 1 construction or verification failure,
//! 2 invalid input.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use locc_core::Error;

pub mod commands;
pub mod format;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_SEED: u64 = 2011;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Invalid(String),
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Invalid(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid input: {m}"),
            CliError::Failed(m) => write!(f, "failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence { .. }
            | Error::FormCheckFailed { .. }
            | Error::WitnessNotFound { .. }
            | Error::RankDeficient { .. }
            | Error::NotOrthonormal { .. } => CliError::Failed(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "locc", version, about = "Local discrimination of bipartite states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Verification tolerance [default: 1e-10; the suite keeps its own thresholds]
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Master seed for anything random
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Write the main document here instead of standard output
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl Common {
    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(DEFAULT_TOL)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Distinguishable basis and protocol for a 2 x n subspace
    Basis {
        #[arg(long = "in")]
        input: PathBuf,
        /// Qubit basis to measure first (states document, dims [2])
        #[arg(long)]
        alice_basis: Option<PathBuf>,
        /// Also write the rotated basis as a states document
        #[arg(long)]
        basis_out: Option<PathBuf>,
    },
    /// Component-form check, or protocol verification with --protocol
    Check {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        alice_basis: Option<PathBuf>,
        #[arg(long)]
        protocol: Option<PathBuf>,
    },
    /// Protocol for two orthogonal states
    TwoState {
        #[arg(long = "in")]
        input: PathBuf,
        /// Keep |0> as the first measurement vector of the first party
        #[arg(long)]
        fixed_first_axis: bool,
    },
    /// Protocol for a three-dimensional subspace containing a product state
    Three {
        #[arg(long = "in")]
        input: PathBuf,
        /// Product state in the subspace (one-state states document)
        #[arg(long, conflicts_with = "find_witness", required_unless_present = "find_witness")]
        witness: Option<PathBuf>,
        /// Search for a product state instead
        #[arg(long)]
        find_witness: bool,
        /// Random starts for --find-witness
        #[arg(long, default_value_t = 64)]
        trials: usize,
        /// Let the second party measure first
        #[arg(long)]
        swap_roles: bool,
    },
    /// Environment-assisted code for a two-Kraus channel
    Channel {
        #[arg(long = "in")]
        input: PathBuf,
        /// Environment measurement basis (states document, dims [2])
        #[arg(long)]
        env_basis: Option<PathBuf>,
        /// Write the code here; the report goes to standard output
        #[arg(long)]
        code_out: Option<PathBuf>,
    },
    /// Exact and sampled confusion matrices of a protocol
    Simulate {
        #[arg(long)]
        protocol: PathBuf,
        /// States to feed in; defaults to those stored with the protocol
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000)]
        shots: usize,
    },
    /// Randomized acceptance suite
    Suite {
        /// Override every criterion's trial count
        #[arg(long)]
        trials: Option<usize>,
    },
}

pub fn read_document(path: &Path) -> Result<format::Envelope, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    format::parse(&text)
}

pub fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Failed(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Runs a parsed command line and returns the exit code.
pub fn run(cli: Cli) -> u8 {
    match commands::dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("locc: {e}");
            e.exit_code()
        }
    }
}

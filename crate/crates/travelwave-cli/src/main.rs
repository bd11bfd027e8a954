//! `travelwave` command-line driver.
//!
//! Exit codes: 0 success, 1 divergence or failed verification, 2 corrupted
//! checkpoint, 3 invalid configuration or arguments, 4 I/O or numerical error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Checksum(String),
    Failed(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Checksum(_) => 2,
            CliError::Config(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Checksum(m) => write!(f, "corrupted checkpoint: {m}"),
            CliError::Failed(m) => write!(f, "{m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<travelwave::Error> for CliError {
    fn from(e: travelwave::Error) -> Self {
        match e {
            travelwave::Error::Checksum { .. } => CliError::Checksum(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "travelwave", version, about = "Traveling waves of a viscous compressible fluid layer with a free surface")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Start from a saved state.
    #[arg(long, value_name = "CHECKPOINT")]
    resume: Option<PathBuf>,
    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum Verb {
    /// Solve at the configured wave speed.
    Solve(Common),
    /// Continue in the wave speed over `forcing.gammas`.
    Sweep(Common),
    /// Run the property checks on the configured problem.
    Verify(Common),
    /// Describe a checkpoint, field file or manifest.
    Inspect {
        path: PathBuf,
        /// Re-evaluate a checkpoint's residual under this configuration.
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    travelwave::exec::init_threads();
    let cli = Cli::parse();
    let res = match cli.verb {
        Verb::Solve(c) => commands::solve(&c.into()),
        Verb::Sweep(c) => commands::sweep(&c.into()),
        Verb::Verify(c) => commands::verify(&c.into()),
        Verb::Inspect { path, config } => commands::inspect(&path, config.as_deref()),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}

impl From<Common> for commands::Invocation {
    fn from(c: Common) -> Self {
        commands::Invocation { config: c.config, out: c.out, resume: c.resume, seed: c.seed }
    }
}

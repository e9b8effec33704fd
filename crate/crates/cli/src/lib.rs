//! The `pdpstar` command-line tool as a library, so tests can drive it
//! without spawning processes.

pub mod args;
pub mod commands;
pub mod output;

use std::ffi::OsString;

use clap::Parser;
use pdpstar_core::Error;

pub use args::{Cli, Command, DEFAULT_SEED};
pub use output::{RunConfig, Summary, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_STATISTICAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence
            | Error::NonFinite(_)
            | Error::ZeroNorm(_)
            | Error::Unreachable { .. }
            | Error::InvalidState(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Numerical(_) | CliError::Csv(_) | CliError::Json(_) => EXIT_NUMERICAL,
        }
    }
}

/// What a successful invocation found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    StatisticalFailure,
    SelftestFailure,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Ok => EXIT_OK,
            Outcome::StatisticalFailure => EXIT_STATISTICAL,
            Outcome::SelftestFailure => EXIT_NUMERICAL,
        }
    }
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Analytic(a) => commands::analytic(&a),
        Command::Mc(a) => commands::mc(&a),
        Command::Generic(a) => commands::generic(&a),
        Command::Oracle(a) => commands::oracle(&a),
        Command::Selftest(a) => commands::selftest(&a),
    }
}

/// Parses `argv`, runs, reports errors on stderr and returns the exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(o) => o.exit_code(),
        Err(e) => {
            eprintln!("pdpstar: {e}");
            e.exit_code()
        }
    }
}

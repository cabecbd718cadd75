//! Configuration, orchestration, and serialized outputs for the boltz2d
//! kinetics experiments. The binary front-end lives in `main.rs`; everything
//! here is library surface so the acceptance suite can drive runs in-process.

pub mod artifacts;
pub mod config;
pub mod experiments;
pub mod report;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<boltz2d::Error> for CliError {
    fn from(e: boltz2d::Error) -> Self {
        match e {
            boltz2d::Error::Config(m) | boltz2d::Error::Domain(m) => CliError::Config(m),
            boltz2d::Error::Numeric { message, achieved } => {
                CliError::Numeric(format!("{message} (achieved {achieved:e})"))
            }
        }
    }
}

impl CliError {
    /// Process exit code: 2 for configuration errors, 3 for numeric
    /// failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

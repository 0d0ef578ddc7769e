use std::process::ExitCode;

use dynkde::harness::HarnessError;
use dynkde::KdeError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    /// Bad input data or configuration.
    #[error("{0}")]
    Data(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Verification(_) => 4,
        })
    }
}

impl From<KdeError> for CliError {
    fn from(e: KdeError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(format!("i/o error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

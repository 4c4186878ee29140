use std::io;
use std::path::Path;
use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config or parameter values (exit 2).
    #[error("{0}")]
    Usage(String),
    /// Input data that fails parsing or validation (exit 1).
    #[error("{0}")]
    Data(String),
    /// Files that cannot be read or written (exit 3).
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn io(path: &Path, e: io::Error) -> Self {
        Self::Io(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Self::Data(_) => 1,
            Self::Usage(_) => 2,
            Self::Io(_) => 3,
        })
    }
}

impl From<candlecast::Error> for CliError {
    fn from(e: candlecast::Error) -> Self {
        use candlecast::Error as E;
        match e {
            E::Config(_) | E::Argument(_) => Self::Usage(e.to_string()),
            E::Io(_) => Self::Io(e.to_string()),
            _ => Self::Data(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

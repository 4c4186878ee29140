use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes or settings that cannot describe a valid model or pipeline.
    #[error("configuration error: {0}")]
    Config(String),
    /// A caller-supplied argument is outside the operation's contract.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// A numeric input lies outside a function's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A malformed input row; `line` is 1-based and counts the header.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    /// Well-formed input whose content is unusable (duplicates, ordering, gaps).
    #[error("data error: {0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

use thiserror::Error;

use nlos_core::NlosError;

/// Dataset decoding failures.
#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("header line {line}: {message}")]
    Header { line: usize, message: String },

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("payload length mismatch: expected {expected} bytes, found {actual} bytes")]
    Size { expected: usize, actual: usize },

    #[error("non-finite value at byte offset {offset}")]
    NonFinite { offset: usize },

    #[error(transparent)]
    Core(#[from] NlosError),
}

/// Malformed configuration input.
#[derive(Debug, Error, PartialEq)]
#[error("line {line}, field `{field}`: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(line: usize, field: &str, message: impl Into<String>) -> Self {
        Self { line, field: field.to_string(), message: message.into() }
    }
}

/// Errors surfaced by the command implementations.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Core(#[from] NlosError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Usage(String),

    #[error("Fresnel approximation invalid here (validity {validity:.3} >= 1); pass --force to use it anyway")]
    FresnelRefused { validity: f64 },

    #[error("benchmark needs at least 3 usable sizes, got {usable} (rejected below clock resolution: {rejected:?})")]
    TooFewSizes { usable: usize, rejected: Vec<usize> },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

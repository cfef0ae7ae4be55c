use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced anywhere in the library.
///
/// The harness groups them into configuration, data and divergence failures
/// (see [`Error::category`]), which the CLI maps onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid batch: requested {size} indices from a population of {population}")]
    InvalidBatch { size: usize, population: usize },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("invalid config `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("task mismatch: {0}")]
    TaskMismatch(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("format error in {field}: {reason}")]
    Format { field: &'static str, reason: String },

    #[error("diverged at iteration {iteration}: {reason}")]
    Divergence { iteration: u64, reason: String },

    #[error("invalid plot: {0}")]
    InvalidPlot(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Coarse failure class, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Divergence,
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Parse { .. } | Error::Format { .. } | Error::Io(_) | Error::Csv(_) => {
                ErrorCategory::Data
            }
            Error::TaskMismatch(_) => ErrorCategory::Data,
            Error::Divergence { .. } => ErrorCategory::Divergence,
            _ => ErrorCategory::Config,
        }
    }
}

use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    Dimension {
        op: &'static str,
        expected: String,
        got: String,
    },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("row {row} (id {id:?}): {message}")]
    Row {
        row: usize,
        id: String,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("unprocessable record {id:?}: {message}")]
    Unprocessable { id: String, message: String },

    #[error("training diverged at epoch {epoch}; last finite loss {last_finite_loss:?}")]
    Divergence {
        epoch: usize,
        last_finite_loss: Option<f64>,
    },

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    IoOrFormat,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io(_) | Error::Format { .. } => ErrorClass::IoOrFormat,
            _ => ErrorClass::Validation,
        }
    }

    pub(crate) fn dim(op: &'static str, expected: impl ToString, got: impl ToString) -> Self {
        Error::Dimension {
            op,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}

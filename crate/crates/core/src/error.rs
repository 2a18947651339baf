//! Crate-wide error type with a stable mapping to process exit codes.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the inputs was violated.
    #[error("domain error: {0}")]
    Domain(String),

    /// An estimator could not produce a value from the given data.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// A numerical routine failed (non-finite values, non-convergence).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A trajectory-log or archive file is malformed; names the offending field.
    #[error("format error: {0}")]
    Format(String),

    /// Training diverged at the given iteration.
    #[error("training error at iteration {iter}: {msg}")]
    Training { iter: usize, msg: String },

    /// SDE integration blew up at the given step.
    #[error("integration error at step {step}: {msg}")]
    Integration { step: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn estimation(msg: impl Into<String>) -> Self {
        Error::Estimation(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    /// Exit code used by the CLI: 0 success, 2 format, 3 estimation,
    /// 4 divergence, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Format(_) | Error::Io(_) => 2,
            Error::Estimation(_) | Error::Numerical(_) => 3,
            Error::Training { .. } | Error::Integration { .. } => 4,
            Error::Domain(_) => 1,
        }
    }
}

// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented precondition or invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A matrix that must be inverted was singular (or numerically so).
    #[error("singular matrix in {context}: {matrix}")]
    Singular {
        context: &'static str,
        matrix: String,
    },

    /// Training produced a non-finite parameter.
    #[error("non-finite parameter after SGD step {step} (last loss {loss})")]
    Diverged { step: usize, loss: f64 },

    /// Relative error is undefined when both ensembles are identically zero.
    #[error("relative error undefined: both ensembles are identically zero")]
    UndefinedMetric,

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Validation(_) | Error::Parse { .. } => 2,
            Error::Singular { .. } | Error::Diverged { .. } | Error::UndefinedMetric => 3,
            Error::Io { .. } | Error::Csv(_) => 1,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of the operation (negative dose, t < 0, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// One or more invariants failed; each entry names the violated condition.
    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("numeric failure at t = {t} h: {message}")]
    Numeric { t: f64, message: String },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric { .. } => 2,
            _ => 1,
        }
    }
}

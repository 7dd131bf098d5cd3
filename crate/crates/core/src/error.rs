use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the solvers, estimators and experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A state or parameter lies outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// An invariant that the algorithms guarantee was broken.
    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    /// A caller supplied arguments that violate a precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A scenario or model configuration is inconsistent.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// A numerical routine failed (quadrature, linear solve, non-finite values).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A time step exceeds what the integrator admits.
    #[error("stability error: {0}")]
    Stability(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the user's configuration rather than by the numerics.
    pub fn is_configuration(&self) -> bool {
        matches!(self, Error::Configuration(_) | Error::Argument(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

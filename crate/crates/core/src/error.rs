use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point ({x}, {y}) lies outside the domain")]
    OutOfDomain { x: f64, y: f64 },

    #[error("no quadrature rule exact to degree {requested} (maximum is {max})")]
    UnsupportedDegree { requested: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is numerically singular{}", .detail.as_deref().map(|d| format!(": {d}")).unwrap_or_default())]
    Singular { detail: Option<String> },

    #[error("eigensolver did not converge in {iterations} iterations (best residual {best_residual:.3e})")]
    ConvergenceFailure {
        iterations: usize,
        best_residual: f64,
    },

    #[error("configuration error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short, stable identifier for the error kind, used by the CLI's
    /// one-line failure report.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::OutOfDomain { .. } => "out-of-domain",
            Error::UnsupportedDegree { .. } => "unsupported-degree",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::Singular { .. } => "singular-matrix",
            Error::ConvergenceFailure { .. } => "convergence-failure",
            Error::Config { .. } => "config",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

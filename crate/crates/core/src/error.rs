use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("argument component {index} is negative or NaN ({value})")]
    NegativeArgument { index: usize, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("coordinate {coordinate} outside the support: {reason}")]
    Domain { coordinate: usize, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("generator contract violated: {0}")]
    GeneratorContract(String),

    #[error("spectral condition violated: {0}")]
    SpectralCondition(String),

    #[error("{what} did not converge (estimate {estimate}, error {error})")]
    NonConvergence {
        what: String,
        estimate: f64,
        error: f64,
    },

    #[error("optimizer hit the iteration cap ({iterations}) with log-likelihood {best}")]
    IterationCap { iterations: usize, best: f64 },

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("malformed input at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Domain,
    Numerical,
}

impl Error {
    pub fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::NonConvergence { .. } | Error::IterationCap { .. } => ErrorClass::Numerical,
            Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_)
            | Error::Parse { .. }
            | Error::InvalidParameter { .. }
            | Error::DimensionMismatch { .. } => ErrorClass::Usage,
            _ => ErrorClass::Domain,
        }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

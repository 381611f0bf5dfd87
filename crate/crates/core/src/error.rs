use thiserror::Error;

/// Unified error type for the simulator library.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: String },

    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: String,
    },

    #[error("objects live on different spaces: {0}")]
    SpaceMismatch(String),

    #[error("Fock truncation too small: leakage {leakage:.3e} exceeds bound {bound:.3e}")]
    TruncationTooSmall { leakage: f64, bound: f64 },

    #[error("operator is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("state invariant violated: {0}")]
    InvalidState(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("integrator failure: {0}")]
    IntegratorFailure(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, CoreError>;

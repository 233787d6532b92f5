use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("gap undefined: top eigenvalue {lambda1} is not positive")]
    UndefinedGap { lambda1: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {lambda_min})")]
    NotPositiveDefinite { lambda_min: f64 },

    #[error("query budget must be positive")]
    InvalidBudget,

    #[error("query budget of {budget} exhausted")]
    BudgetExceeded { budget: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionError { expected: usize, got: usize },

    #[error("vector {index} is linearly dependent on its predecessors")]
    DependentVector { index: usize },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("cannot embed a {s}x{s} block into dimension {d}")]
    EmbedError { s: usize, d: usize },

    #[error("calibration error: {0}")]
    CalibrationError(String),

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("inner linear solve failed in round {round}: {source}")]
    InnerSolveFailed {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("rotation construction degenerate at step {step}")]
    DegenerateSpan { step: usize },

    #[error("corner block is numerically singular (condition number {cond:e})")]
    SingularBlock { cond: f64 },

    #[error("invalid config field `{field}`: {reason}")]
    ConfigError { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::ConfigError {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

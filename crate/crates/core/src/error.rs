use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("index {index} out of range (stored depth {depth})")]
    OutOfRange { index: usize, depth: usize },

    /// A computation needs convergents beyond what is stored.
    #[error("insufficient depth: {what} needs depth > {required}, have {depth}")]
    InsufficientDepth { what: String, required: usize, depth: usize },

    #[error("kappa {kappa} not resolvable: {reason}")]
    Kappa { kappa: i64, reason: String },

    #[error("solver did not converge: best residual {best_residual:e} after {iterations} iterations")]
    Convergence { best_residual: f64, iterations: usize },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("ordering violated: {0}")]
    Ordering(String),

    #[error("window overflow: index {index} outside [{lo}, {hi})")]
    Window { index: i64, lo: i64, hi: i64 },

    #[error("window too small: {0}")]
    Infeasible(String),

    #[error("empty family: {0}")]
    EmptyFamily(String),

    /// A proved inequality failed on computed data.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("io: {0}")]
    Io(String),

    #[error("serialization: {0}")]
    Serde(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

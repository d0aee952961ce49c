use thiserror::Error;

/// Errors produced by solvers, geometry primitives and the run harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on user input was violated (dimension mismatch,
    /// out-of-range parameter, infeasible point, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A numeric failure: non-finite values or a diverging iterate.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A configuration inconsistency detected before or during a solve.
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

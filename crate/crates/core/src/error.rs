use thiserror::Error;

/// Errors raised by the model, solver and estimation layers.
#[derive(Debug, Error)]
pub enum MirError {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invariant violated at {path}: {message}")]
    Invariant { path: String, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("problem is infeasible")]
    Infeasible,

    #[error("problem is unbounded")]
    Unbounded,

    #[error("node budget of {budget} exhausted")]
    BudgetExhausted { budget: usize },

    #[error("no dual feasible basis for cost vector {0}")]
    EmptyDualSet(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("distribution error: {0}")]
    Distribution(String),

    #[error("series did not converge within {0} terms")]
    NotConverged(usize),
}

impl MirError {
    pub(crate) fn invariant(path: impl Into<String>, message: impl Into<String>) -> Self {
        MirError::Invariant {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, MirError>;

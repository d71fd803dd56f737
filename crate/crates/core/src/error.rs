use thiserror::Error;

/// Errors raised by the evaluation and verification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QError {
    #[error("base q = {q} outside admissible range [{min}, {max}]")]
    InvalidBase { q: f64, min: f64, max: f64 },

    #[error("invalid truncation policy: {0}")]
    InvalidPolicy(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("singular factor at index j = {j}")]
    SingularPoint { j: u32 },

    #[error("truncation budget of {max_terms} terms exceeded (achieved tail bound {achieved:e})")]
    TruncationBudgetExceeded { max_terms: usize, achieved: f64 },

    #[error("no witness found within {budget} samples")]
    WitnessNotFound { budget: usize },

    #[error("non-finite result: {0}")]
    NonFinite(String),

    #[error("size {n} exceeds cap {cap}")]
    CapExceeded { n: u32, cap: u32 },
}

impl QError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        QError::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, QError>;

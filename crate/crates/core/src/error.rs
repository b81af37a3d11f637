use thiserror::Error;

use crate::instance::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("infeasible allocation: {0}")]
    Infeasible(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(ValidationReport),

    #[error("rescale requires delta * max B < 1 (got {product}); choose delta < {bound}")]
    RescaleBound { product: f64, bound: f64 },

    #[error("parse error at {context}: {message}")]
    Parse { context: String, message: String },

    #[error("agent {0} out of range")]
    AgentOutOfRange(usize),

    #[error("negative entry {value} at index {index}")]
    NegativeEntry { index: usize, value: f64 },

    #[error("nonpositive denominator {value} for agent {agent}; the profile breaches feasibility")]
    NonPositiveDenominator { agent: usize, value: f64 },

    #[error("singular matrix at pivot {0}")]
    Singular(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }
}

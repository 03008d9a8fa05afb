use thiserror::Error;

use crate::linprog::LpError;

/// Errors raised by the solver pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GlmpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("term {index} has a zero exponent")]
    ZeroExponent { index: usize },

    #[error("term {term} has nonpositive base {value} at the given point")]
    NonpositiveBase { term: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("linear program failed: {0}")]
    Lp(#[from] LpError),

    #[error("linear subproblem unexpectedly {0}")]
    LpStatus(&'static str),

    #[error("instance violates modelling assumptions: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("degenerate simplex: {0}")]
    DegenerateSimplex(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("instance generation failed after {retries} draws: {reason}")]
    Generation { retries: usize, reason: String },

    #[error("oracle not applicable: {0}")]
    OracleUnsupported(String),
}

pub type Result<T, E = GlmpError> = std::result::Result<T, E>;

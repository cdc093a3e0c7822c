use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("polytope is empty")]
    EmptyPolytope,

    #[error("polyhedron is unbounded")]
    Unbounded,

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("subproblem infeasible: {0}")]
    Infeasible(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("safety cap of {0} iterations exceeded")]
    SafetyCap(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

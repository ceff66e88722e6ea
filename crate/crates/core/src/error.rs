use thiserror::Error;

/// Errors produced by graph construction, solvers, and experiment drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("node {node} has zero degree; normalized Laplacian undefined")]
    ZeroDegree { node: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("degenerate problem: {0}")]
    Degenerate(String),

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("rejection limit reached after {attempts} attempts: {context}")]
    RejectionLimit { attempts: usize, context: String },

    #[error("minimum of the error curve sits on the eta grid boundary (index {index} of {len}); widen the grid")]
    BoundaryMinimum { index: usize, len: usize },

    #[error("partition side must be a nonempty proper subset of the nodes")]
    EmptySide,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

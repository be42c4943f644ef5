use thiserror::Error;

/// Errors raised by mesh construction, operator assembly and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("non-manifold connectivity: {0}")]
    NonManifold(String),
    #[error("inconsistent orientation: {0}")]
    Orientation(String),
    #[error("degenerate simplex {simplex:?} (volume {volume:e})")]
    Degenerate { simplex: Vec<usize>, volume: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("complex is not closed: {0}")]
    NotClosed(String),
    #[error("complex has no boundary")]
    EmptyBoundary,
    #[error("gluing failed: {0}")]
    Glue(String),
    #[error("solver breakdown: {0}")]
    Solver(String),
    #[error("mismatched operands: {0}")]
    Mismatch(String),
    #[error("degenerate symplectic form: smallest singular value {0:e}")]
    DegenerateForm(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

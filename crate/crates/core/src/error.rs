use thiserror::Error;

/// Errors raised anywhere in the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid physical parameters: {0}")]
    InvalidParams(String),
    #[error("mesh parse error at line {line}: {msg}")]
    MeshParse { line: usize, msg: String },
    #[error("mesh validation failed: {0}")]
    MeshValidation(String),
    #[error("unsupported polynomial degree {0} (expected 1, 2 or 3)")]
    UnsupportedDegree(usize),
    #[error("boundary tag mismatch: expected {expected:?}, got {got:?}")]
    TagMismatch {
        expected: crate::geometry::BoundaryTag,
        got: crate::geometry::BoundaryTag,
    },
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

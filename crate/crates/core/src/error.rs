use thiserror::Error;

/// Errors produced by `convgeom-core`.
#[derive(Debug, Error)]
pub enum Error {
    /// Tensor, filter or image dimensions are incompatible.
    #[error("shape error: {0}")]
    Shape(String),
    /// A scalar argument is outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),
    /// An input has zero norm (or an output collapsed to zero) where a
    /// direction is required.
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// An operation was called on an activation that does not satisfy its
    /// contract (e.g. a non-homogeneous activation where one is required).
    #[error("contract violation: {0}")]
    Contract(String),
    /// Malformed image file.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn degenerate(msg: impl Into<String>) -> Error {
    Error::Degenerate(msg.into())
}

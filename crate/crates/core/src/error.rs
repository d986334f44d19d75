use alloc::string::String;
use core::fmt;

/// Errors produced by the geometry and probing routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Input violated a documented precondition.
    Validation(String),
    /// Two operands had incompatible shapes.
    DimensionMismatch { expected: usize, found: usize },
    /// A lookup by id failed.
    NotFound(String),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Validation(msg) => write!(f, "validation error: {msg}"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::NotFound(what) => write!(f, "not found: {what}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

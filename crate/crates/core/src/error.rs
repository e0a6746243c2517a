//! Error type shared by all solver modules.

use alloc::string::String;
use core::fmt;

/// Errors reported by the solver stack.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Shapes or sizes of the inputs do not line up.
    InvalidDimension(String),
    /// A scalar parameter is out of its admissible range.
    InvalidParameter(String),
    /// Label data cannot support the requested operation (e.g. a class
    /// with no samples).
    DegenerateLabels(String),
    /// An iterative solver produced non-finite values or exhausted its
    /// safeguards.
    NumericalDivergence(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidDimension(msg) => write!(f, "invalid dimension: {msg}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::DegenerateLabels(msg) => write!(f, "degenerate labels: {msg}"),
            Error::NumericalDivergence(msg) => write!(f, "numerical divergence: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

//! Tool-level error type with the exit-code classification used by the
//! CLI: usage problems are handled by the argument parser, data and parse
//! problems exit 2, numerical failures exit 3.

use scsc_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum ToolError {
    #[error("{0}")]
    Core(#[from] CoreError),
    /// Malformed file contents, with the byte offset of the problem.
    #[error("parse error at byte {offset}: {detail}")]
    Parse { offset: usize, detail: String },
    /// Well-formed but unusable data (wrong magic, bad label value, ...).
    #[error("{0}")]
    Data(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl ToolError {
    /// CLI exit code: 2 for data/parse problems, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            ToolError::Core(CoreError::NumericalDivergence(_)) => 3,
            _ => 2,
        }
    }
}

pub type ToolResult<T> = Result<T, ToolError>;

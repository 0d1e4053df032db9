//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by graph construction, file parsing, model assembly,
/// and training.
#[derive(Debug, Error)]
pub enum Error {
    /// Underlying I/O failure while reading or writing a file.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// I/O failure on a named file, so diagnostics can point at the path.
    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },

    /// A text input (graph, dataset, model file, or architecture string)
    /// failed to parse. `context` names the input, `line` is 1-based
    /// (0 when the input has no meaningful line structure).
    #[error("{context}: parse error at line {line}: {message}")]
    Parse {
        context: &'static str,
        line: usize,
        message: String,
    },

    /// An architecture string failed to parse or describes an illegal layer
    /// composition. `position` is the 1-based character offset of the
    /// offending term.
    #[error("architecture string: error at position {position}: {message}")]
    Arch { position: usize, message: String },

    /// Operands with incompatible shapes were combined.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A configuration value is out of its valid range or the requested
    /// combination of options is inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A numeric routine failed to converge or produced a non-finite value.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn parse(context: &'static str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            context,
            line,
            message: message.into(),
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

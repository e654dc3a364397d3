use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// The file is not well-formed for its format (JSON, CoNLL-U, vector text).
    #[error("{context}: line {line}, column {column}: {message}")]
    Schema {
        context: String,
        line: usize,
        column: usize,
        message: String,
    },

    /// Parsed successfully but violates a domain invariant.
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn schema(context: impl Into<String>, line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Schema {
            context: context.into(),
            line,
            column,
            message: message.into(),
        }
    }

    pub(crate) fn from_json(context: impl Into<String>, err: serde_json::Error) -> Self {
        Error::schema(context, err.line(), err.column(), err.to_string())
    }

    /// Process exit code used by the command-line tool: 1 for I/O, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 1,
            _ => 2,
        }
    }
}

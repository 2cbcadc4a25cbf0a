use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("node index {index} out of bounds for a graph with {num_nodes} nodes (line {line})")]
    Bounds {
        index: usize,
        num_nodes: usize,
        line: usize,
    },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("generator failed: {0}")]
    Generator(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Broad category used for process exit codes and FFI status values.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parameter(_) | Error::Parse { .. } | Error::Bounds { .. } => ErrorKind::Usage,
            Error::InvalidGraph(_) => ErrorKind::Usage,
            Error::Io { .. } | Error::Json(_) => ErrorKind::Io,
            Error::Numeric(_) | Error::Generator(_) => ErrorKind::Numeric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Io,
    Numeric,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 1,
            ErrorKind::Io => 2,
            ErrorKind::Numeric => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

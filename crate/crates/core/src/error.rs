use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("{}:{line}: {message}", file.display())]
    Format {
        file: PathBuf,
        line: usize,
        message: String,
    },

    #[error("catalog conflict: {0}")]
    CatalogConflict(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("model has {nodes} nodes but Node MEM holds at most {capacity}")]
    Capacity { nodes: usize, capacity: usize },

    #[error("model uses {features} features but the 3-bit HPC ID field addresses at most {max}")]
    Width { features: usize, max: usize },

    #[error("corrupt model image at node {index}: {reason}")]
    Corruption { index: usize, reason: String },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Process exit status classes used by the command-line front end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Model,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) => ErrorClass::Usage,
            Error::Capacity { .. } | Error::Width { .. } | Error::Corruption { .. } => {
                ErrorClass::Model
            }
            _ => ErrorClass::Data,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Usage => 1,
            ErrorClass::Data => 2,
            ErrorClass::Model => 3,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("report {0}")]
    Report(String),

    #[error(transparent)]
    Core(#[from] wmlab::error::Error),
}

impl HarnessError {
    pub fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 for bad input or configuration, 3 for I/O.
    pub fn exit_code(&self) -> u8 {
        use wmlab::error::Error as E;
        match self {
            HarnessError::Io { .. } => 3,
            HarnessError::Core(E::Io(_) | E::MalformedFile(_) | E::UnsupportedFormat(_)) => 3,
            _ => 1,
        }
    }
}

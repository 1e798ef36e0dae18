use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}: {location}: {message}")]
    Parse {
        path: PathBuf,
        /// `byte N` or `line N`.
        location: String,
        message: String,
    },

    #[error("invalid dataset: {0}")]
    Data(String),

    #[error("invalid experiment: {0}")]
    Usage(String),

    #[error(transparent)]
    Numeric(#[from] csnk_core::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 1 usage, 2 data or parse, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 1,
            HarnessError::Io { .. } | HarnessError::Parse { .. } | HarnessError::Data(_) | HarnessError::Csv(_) => 2,
            HarnessError::Numeric(csnk_core::Error::InvalidArgument(_) | csnk_core::Error::Shape { .. }) => 1,
            HarnessError::Numeric(_) => 3,
        }
    }
}

use std::io;
use std::path::PathBuf;

use permpois_core::harness::HarnessError;
use permpois_core::permtest::PermutationError;
use permpois_core::scenarios::ScenarioError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Bad flags, config values or input contents.
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}: malformed CSV: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },

    #[error(transparent)]
    Harness(#[from] HarnessError),

    #[error(transparent)]
    Scenario(#[from] ScenarioError),

    #[error(transparent)]
    Permutation(#[from] PermutationError),

    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// 1 for runtime and I/O failures, 2 for usage and validation errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::ThreadPool(_) | Error::Json(_) => 1,
            Error::Csv { source, .. } if matches!(source.kind(), csv::ErrorKind::Io(_)) => 1,
            _ => 2,
        }
    }
}

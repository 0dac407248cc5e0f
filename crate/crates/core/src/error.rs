use std::path::PathBuf;

use thiserror::Error;

/// Every failure the pipeline can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("video {video} has {publishers} publishers, expected exactly one")]
    MalformedPublishing { video: String, publishers: usize },

    #[error("graph has no user-video edges")]
    EmptyGraph,

    #[error("dataset is empty after filtering")]
    EmptyDataset,

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value in {term}")]
    Numeric { term: String },

    #[error("negative sampling exhausted for user {user} after {attempts} attempts")]
    SamplingExhausted { user: u32, attempts: usize },

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("checkpoint shape mismatch: {what} is {found} in checkpoint but {expected} in config")]
    CheckpointShape {
        what: &'static str,
        found: usize,
        expected: usize,
    },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("user {user} has no candidate videos")]
    EmptyCandidates { user: u32 },

    #[error("split leakage: target video {video} of user {user} is in the exclusion set")]
    SplitLeakage { user: u32, video: u32 },

    #[error("no evaluable users in split {0}")]
    NoEvaluableUsers(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the error family: 2 for I/O, 3 for validation,
    /// 4 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            Error::Numeric { .. } => 4,
            _ => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, AirError>;

#[derive(Debug, Error)]
pub enum AirError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("query has no content terms")]
    EmptyQuery,

    #[error("candidate pool is empty")]
    EmptyPool,

    #[error("pool has {pool} sentences but {requested} parallel chains were requested")]
    PoolTooSmall { requested: usize, pool: usize },

    #[error("embedding file is empty")]
    EmptyFile,

    #[error("malformed embedding line {line_no}: {reason}")]
    MalformedLine { line_no: usize, reason: String },

    #[error("line {line_no} has dimension {found}, expected {expected}")]
    InconsistentDim {
        line_no: usize,
        expected: usize,
        found: usize,
    },

    #[error("parse error at {location}: {message}")]
    ParseError { location: String, message: String },

    #[error("missing field `{0}`")]
    MissingField(String),

    #[error("question has {0} answer choices, expected 8")]
    WrongChoiceCount(usize),

    #[error("question ids of retrieved and gold sets do not line up: {0}")]
    IdMismatch(String),

    #[error("gold set for `{id}` has {found} members, expected 2")]
    GoldArityError { id: String, found: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("bad index file: {0}")]
    BadIndexFile(String),
}

impl AirError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AirError::Io {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Record {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("label file has {labels} lines but data file has {records} records")]
    LabelCountMismatch { records: usize, labels: usize },

    #[error("unknown knowledge category {found:?}; expected one of: {expected}")]
    UnknownCategory { found: String, expected: String },

    #[error("unknown relation tag {found:?}; expected one of: {expected}")]
    UnknownRelation { found: String, expected: String },

    #[error("duplicate example id {0:?}")]
    DuplicateId(String),

    #[error("annotation refers to unknown example id {0:?}")]
    UnknownExampleId(String),

    #[error("annotation id sets differ; only in first: {only_first:?}; only in second: {only_second:?}")]
    IdSetMismatch {
        only_first: Vec<String>,
        only_second: Vec<String>,
    },

    #[error("invalid example {id:?}: {message}")]
    InvalidExample { id: String, message: String },

    #[error("context must not be empty")]
    EmptyContext,

    #[error("context analysis failed for {id:?}: {message}")]
    Analysis { id: String, message: String },

    #[error("rule table line {line}: {message}")]
    RuleTable { line: usize, message: String },

    #[error("example {id:?} has no {missing} required by mode {mode}")]
    MissingTag {
        id: String,
        mode: String,
        missing: &'static str,
    },

    #[error("token {0:?} is not in the vocabulary; register tag tokens before training")]
    UnregisteredToken(String),

    #[error("vocabulary is frozen: tag tokens must be registered before training starts")]
    VocabularyFrozen,

    #[error("model was trained with mode {trained} but evaluation requested mode {requested}")]
    ModeMismatch { trained: String, requested: String },

    #[error("non-finite loss {loss} at epoch {epoch}, step {step}")]
    NonFiniteLoss { epoch: usize, step: usize, loss: f32 },

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("results are not comparable: {0}")]
    SplitMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Precondition(String),

    #[error("every grid trial failed; last error: {0}")]
    AllTrialsFailed(String),

    #[error("tokenizer: {0}")]
    Tokenizer(String),

    #[error(transparent)]
    Tensor(#[from] candle_core::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<tokenizers::Error> for Error {
    fn from(e: tokenizers::Error) -> Self {
        Error::Tokenizer(e.to_string())
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("line {line}: unknown instance id `{id}`")]
    UnknownId { id: String, line: usize },

    #[error("instance index {0} is outside the dataset")]
    IndexOutOfRange(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("class index {label} out of range for {n_classes} classes")]
    InvalidLabel { label: usize, n_classes: usize },

    #[error("instance {0} is not labeled")]
    Unlabeled(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("class {0} has no instances")]
    MissingClass(usize),

    #[error("instance {id} has no linked instances or attributes")]
    NoContext { id: usize },

    #[error("not a tree: {0}")]
    NotATree(String),

    #[error("not a stochastic matrix: {0}")]
    NotStochastic(String),

    #[error("missing config key `{0}`")]
    MissingKey(String),

    #[error("config: {0}")]
    Config(String),

    #[error("batch {batch}: {source}")]
    AtBatch {
        batch: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_batch(batch: usize) -> impl FnOnce(Error) -> Error {
        move |e| Error::AtBatch {
            batch,
            source: Box::new(e),
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate id {0:?}")]
    DuplicateKey(String),

    #[error("undefined for this input: {0}")]
    UndefinedInput(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("unknown document {0:?}")]
    UnknownDocument(String),

    #[error("unknown synonym cluster {0:?}")]
    UnknownCluster(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("distributions are defined over different vocabularies")]
    SupportMismatch,

    #[error("zipf fit needs at least 2 points, got {0}")]
    Fit(usize),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("corrupt index snapshot: {0}")]
    Snapshot(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

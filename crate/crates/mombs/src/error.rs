//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid model/spec/config values (bad dimensions, out-of-range knobs).
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// A vector or matrix had the wrong length for the operation.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A forward trace does not belong to the model it was handed to, or is
    /// otherwise unusable for gradient computation.
    #[error("stale or incompatible trace: {0}")]
    StaleTrace(String),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),

    #[error("{what} is not a permutation of 0..{len}")]
    NotAPermutation { what: &'static str, len: usize },

    #[error("expected a minibatch of size 2, got {0}")]
    BatchSize(usize),

    #[error("plan does not cover the index set: {0}")]
    Coverage(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("row {row}: {msg}")]
    CsvRow { row: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("training aborted: {0}")]
    Training(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

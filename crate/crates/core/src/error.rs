//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by corpus ingestion, sampling, loss evaluation, and the
/// synthetic training harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed record: {message}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: duplicate id \"{id}\"")]
    DuplicateId {
        path: PathBuf,
        line: usize,
        id: String,
    },

    #[error("{path}:{line}: empty id")]
    EmptyId { path: PathBuf, line: usize },

    #[error("duplicate score row for (query \"{query_id}\", doc \"{doc_id}\")")]
    DuplicateScoreRow { query_id: String, doc_id: String },

    #[error("non-finite score for (query \"{query_id}\", doc \"{doc_id}\")")]
    NonFiniteScore { query_id: String, doc_id: String },

    #[error("query \"{query_id}\" has no registered positive")]
    MissingPositive { query_id: String },

    #[error("positive doc \"{doc_id}\" of query \"{query_id}\" has no score row")]
    PositiveWithoutScore { query_id: String, doc_id: String },

    #[error("query \"{query_id}\" references unknown {kind} id \"{id}\"")]
    UnknownId {
        query_id: String,
        kind: &'static str,
        id: String,
    },

    #[error("pool of query \"{query_id}\" is empty")]
    EmptyPool { query_id: String },

    #[error("empty value list")]
    EmptyInput,

    #[error("probability {p} outside [0, 1]")]
    InvalidProbability { p: f64 },

    #[error("k={k} is invalid: quantile anchors need k >= 2 (anchor spacing divides by k - 1)")]
    KTooSmall { k: usize },

    #[error("query \"{query_id}\": requested k={k} but only {available} {kind} negatives available")]
    PoolTooSmall {
        query_id: String,
        k: usize,
        available: usize,
        kind: &'static str,
    },

    #[error("strategy \"random\" requires a seed")]
    SeedRequired,

    #[error("unknown strategy tag \"{tag}\"")]
    UnknownStrategy { tag: String },

    #[error("unknown objective \"{name}\" (expected \"kl\" or \"margin_mse\")")]
    UnknownObjective { name: String },

    #[error("temperature must be positive, got {tau}")]
    InvalidTemperature { tau: f64 },

    #[error("non-finite value in input")]
    NonFiniteInput,

    #[error("scored list is invalid: {message}")]
    InvalidScoredList { message: String },

    #[error("zero vector has no direction for cosine similarity")]
    ZeroVector,

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid world config: {message}")]
    InvalidConfig { message: String },

    #[error("training diverged: non-finite loss at {context}")]
    NonFiniteLoss { context: String },

    #[error("batch size must be >= 2 for in-batch negatives, got {batch_size}")]
    BatchTooSmall { batch_size: usize },

    #[error("no training samples")]
    NoSamples,

    #[error("no evaluation queries")]
    NoEvalQueries,

    #[error("invalid cutoff {k}: must be >= 1")]
    InvalidCutoff { k: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

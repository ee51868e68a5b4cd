use std::io;

use thiserror::Error;

/// Errors produced by the annocart library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(
        "line {line}: duplicate annotation for item `{item_id}` by annotator `{annotator_id}` (first seen on line {first_line})"
    )]
    DuplicatePair {
        line: usize,
        first_line: usize,
        item_id: String,
        annotator_id: String,
    },

    #[error("input contains no annotation records")]
    EmptyCorpus,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("training diverged at epoch {epoch}: {detail}")]
    Divergence { epoch: usize, detail: String },

    #[error("empty series")]
    EmptySeries,

    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("exact test supports at most {limit} pooled observations, got {got}")]
    SizeLimit { limit: usize, got: usize },

    #[error("incomplete dynamics for key {key}: {found} of {expected} epochs recorded")]
    IncompleteKey {
        key: String,
        found: usize,
        expected: usize,
    },

    #[error("key mismatch: {0}")]
    KeyMismatch(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

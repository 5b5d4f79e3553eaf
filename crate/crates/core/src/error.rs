use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),
    #[error("invalid meaning: {0}")]
    InvalidMeaning(String),
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("alphabet of {available} symbols cannot supply {required} distinct codes")]
    AlphabetTooSmall { available: usize, required: usize },
    #[error("invalid codebook: {0}")]
    InvalidCodebook(String),
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
    #[error("insufficient corpus: {0}")]
    InsufficientCorpus(String),
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("run diverged at step {step}: {detail}")]
    Diverged { step: usize, detail: String },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("schema mismatch in {path}: {detail}")]
    Schema { path: PathBuf, detail: String },
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape { op, detail: detail.into() }
    }

    /// Stable machine-readable tag used in CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidVocabulary(_) => "invalid_vocabulary",
            Error::InvalidMeaning(_) => "invalid_meaning",
            Error::InvalidSignal(_) => "invalid_signal",
            Error::InvalidConfig(_) => "invalid_config",
            Error::Parse(_) => "parse",
            Error::EmptyInput(_) => "empty_input",
            Error::AlphabetTooSmall { .. } => "alphabet_too_small",
            Error::InvalidCodebook(_) => "invalid_codebook",
            Error::Shape { .. } => "shape",
            Error::NonFinite(_) => "non_finite",
            Error::InsufficientCorpus(_) => "insufficient_corpus",
            Error::DegenerateSample(_) => "degenerate_sample",
            Error::Diverged { .. } => "diverged",
            Error::Checkpoint(_) => "checkpoint",
            Error::Schema { .. } => "schema",
            Error::MissingFile(_) => "missing_file",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

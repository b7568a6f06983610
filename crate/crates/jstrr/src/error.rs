use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library and surfaced by the CLI.
///
/// Exit-code mapping: validation problems (bad inputs, bad configuration,
/// missing files) exit with 2, numerical/model failures with 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed record at line {line}: {message}")]
    MalformedRecord { line: usize, message: String },

    #[error("rating out of range at line {line}")]
    RatingOutOfRange { line: usize, rating: i64 },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("cannot balance: one class empty")]
    EmptyClass,

    #[error("split fraction {fraction} yields an empty partition for {documents} documents")]
    EmptySplit { fraction: f64, documents: usize },

    #[error("lexicon term {term:?} appears in both the positive and negative lists")]
    LexiconConflict { term: String },

    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),

    #[error("word {word} excluded by prior")]
    WordExcludedByPrior { word: u32 },

    #[error("conditional for document {doc}, position {position} has no admissible label")]
    ZeroConditional { doc: usize, position: usize },

    #[error("word {word} of document {doc} has zero predictive probability")]
    UnpredictableWord { doc: String, word: u32 },

    #[error("documents with zero-probability words: {}", .docs.join(", "))]
    UnpredictableDocuments { docs: Vec<String> },

    #[error("estimated rating distribution assigns zero probability to observed rating {rating}")]
    ZeroRatingProbability { rating: u8 },

    #[error("absolute continuity violated")]
    AbsoluteContinuity { index: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("vocabulary hash mismatch: checkpoint {expected}, file {actual}")]
    VocabularyMismatch { expected: String, actual: String },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("json error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// CLI exit code: 2 for validation errors, 3 for numerical/model errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::WordExcludedByPrior { .. }
            | Error::ZeroConditional { .. }
            | Error::UnpredictableWord { .. }
            | Error::UnpredictableDocuments { .. }
            | Error::ZeroRatingProbability { .. }
            | Error::AbsoluteContinuity { .. } => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

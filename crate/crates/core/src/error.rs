use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Display strings start with a stable phrase so that callers (and the CLI's
/// single-line error output) can match on them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("ragged rows: line {line} has {found} columns, expected {expected}")]
    RaggedRows {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("non-numeric cell: line {line}, column {column}: {value:?}")]
    NonNumeric {
        line: usize,
        column: usize,
        value: String,
    },

    #[error("invalid label: line {line}: {value:?} (expected 0 or 1)")]
    InvalidLabel { line: usize, value: String },

    #[error("conflicting labels for subject {0:?}")]
    ConflictingLabels(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("bad header: {0}")]
    BadHeader(String),

    #[error("ragged envelopes: segment counts differ ({min} vs {max})")]
    RaggedEnvelopes { min: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("duplicate subject id {0:?}")]
    DuplicateSubject(String),

    #[error("degenerate class: row {row} has no {missing} neighbor")]
    DegenerateClass { row: usize, missing: &'static str },

    #[error("single-class dataset")]
    SingleClass,

    #[error("cutoff exhausts envelope (cutoff={cutoff}, m={segments})")]
    CutoffExhaustsEnvelope { cutoff: usize, segments: usize },

    #[error("degenerate cluster mass: {0}")]
    DegenerateClusterMass(String),

    #[error("too many clusters: {clusters} requested from {samples} samples")]
    TooManyClusters { clusters: usize, samples: usize },

    #[error("layer exhausted: {0}")]
    LayerExhausted(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("cannot satisfy class presence: {0}")]
    ClassPresence(String),

    #[error("fold {fold} failed at {stage}: {source}")]
    Fold {
        fold: usize,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn in_fold(self, fold: usize, stage: &'static str) -> Self {
        Error::Fold {
            fold,
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

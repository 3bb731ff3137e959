use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: duplicate tweet id {id:?}")]
    DuplicateId { line: usize, id: String },

    #[error("unknown label {0:?} (expected OFF or NOT)")]
    UnknownLabel(String),

    #[error("empty text")]
    EmptyText,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("training data is empty")]
    EmptyTrainingSet,

    #[error("training data contains a single class ({0}); both OFF and NOT are required")]
    SingleClass(&'static str),

    #[error("need at least {needed} {label} examples for {k} folds, found {found}")]
    TooFewExamples {
        label: &'static str,
        k: usize,
        needed: usize,
        found: usize,
    },

    #[error("reply {id:?} is addressed to {found:?}, not {expected:?}")]
    ReplyTargetMismatch {
        id: String,
        expected: String,
        found: String,
    },

    #[error("length mismatch: {0} gold labels vs {1} predictions")]
    LengthMismatch(usize, usize),

    #[error("relative improvement is undefined for a zero baseline")]
    ZeroBaseline,

    #[error("fold {fold}: {count} test-fold texts leaked into a training set")]
    FoldHygiene { fold: usize, count: usize },

    #[error("not a model file (bad magic)")]
    BadMagic,

    #[error("model format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("model file is corrupt: checksum mismatch")]
    ChecksumMismatch,

    #[error("model file is corrupt: {0}")]
    CorruptModel(String),

    #[error("model variant mismatch: expected {expected}, found {found}")]
    VariantMismatch {
        expected: &'static str,
        found: String,
    },

    #[error("model scalar type mismatch: expected {expected}, found {found}")]
    ScalarMismatch {
        expected: &'static str,
        found: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

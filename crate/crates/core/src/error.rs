use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("no documents survived length filtering [{min_len}, {max_len}] in {path}")]
    NoDocuments {
        path: PathBuf,
        min_len: usize,
        max_len: usize,
    },

    #[error("vocabulary is empty at min_count {min_count}")]
    EmptyVocabulary { min_count: u64 },

    #[error("malformed {what} at line {line}: {reason}")]
    Parse {
        what: &'static str,
        line: usize,
        reason: String,
    },

    #[error("co-occurrence file framing error at byte {offset}: {reason}")]
    Framing { offset: u64, reason: String },

    #[error("removal exceeds base weight at ({i}, {j}): base {base}, delta {delta}")]
    RemovalExceedsBase { i: u32, j: u32, base: f64, delta: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite loss in epoch {epoch} at entry ({i}, {j})")]
    NonFiniteLoss { epoch: usize, i: u32, j: u32 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("vocabulary mismatch: model bound to {expected:016x}, got {found:016x}")]
    VocabMismatch { expected: u64, found: u64 },

    #[error("context parameters unavailable (model loaded without its sidecar)")]
    ContextUnavailable,

    #[error("zero-norm vector for word '{word}'")]
    ZeroNorm { word: String },

    #[error("word '{word}' is not in the vocabulary")]
    UnknownWord { word: String },

    #[error("invalid WEAT spec '{name}': {reason}")]
    InvalidWeat { name: String, reason: String },

    #[error("degenerate WEAT: all target associations equal")]
    DegenerateWeat,

    #[error("attribute sets indistinguishable")]
    IndistinguishableAttributes,

    #[error("Hessian for word '{word}' is not positive definite after damping {lambda:e}")]
    NotPositiveDefinite { word: String, lambda: f64 },

    #[error("perturbation of ({i}, {j}) touches a zero co-occurrence; the bias gradient is undefined there")]
    NonDifferentiable { i: u32, j: u32 },

    #[error("document id {doc_id} out of range (corpus has {n_docs})")]
    DocOutOfRange { doc_id: usize, n_docs: usize },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("debate title is empty")]
    EmptyTitle,
    #[error("duplicate debate id {0:?}")]
    DuplicateDebate(String),
    #[error("votes reference unknown debate ids: {}", .0.join(", "))]
    UnknownDebates(Vec<String>),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("cannot split {debates} debates into {k} folds")]
    TooManyFolds { k: usize, debates: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("text has no tokens to featurize")]
    EmptyText,
    #[error("no precomputed vector for statement {0:?}")]
    MissingStatement(String),
    #[error("non-finite {what} at epoch {epoch}, batch {batch}; learning rate too high?")]
    NonFinite {
        what: &'static str,
        epoch: usize,
        batch: usize,
    },
    #[error("model format: {0}")]
    ModelFormat(String),
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("zero variance: coefficient undefined")]
    ZeroVariance,
    #[error("empty group: {0}")]
    EmptyGroup(String),
    #[error("bin width must be positive, got {0}")]
    InvalidBinWidth(f64),
    #[error("d_min {d_min} exceeds d_max {d_max}")]
    DistanceOrder { d_min: f64, d_max: f64 },
    #[error("zero-length vector has no direction")]
    ZeroNorm,
}

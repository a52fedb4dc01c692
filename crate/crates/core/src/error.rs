//! Crate-wide error type.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input at index {index}")]
    NonFiniteInput { index: usize },

    #[error("video '{video_id}' has clips without logits")]
    MissingLogits { video_id: String },

    #[error("video '{video_id}' has clips without pseudo-labels")]
    MissingPseudoLabels { video_id: String },

    #[error("unknown video '{video_id}'")]
    UnknownVideo { video_id: String },

    #[error("video '{video_id}' is already labeled")]
    AlreadyLabeled { video_id: String },

    #[error("no unlabeled videos in the pool")]
    EmptyPool,

    #[error("empty input: {context}")]
    EmptyInput { context: &'static str },

    #[error("no test videos to evaluate")]
    EmptyTestSet,

    #[error("no labeled clips to train on")]
    NoLabeledData,

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("unknown strategy '{name}'; valid strategies: {valid}")]
    UnknownStrategy { name: String, valid: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("model file i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("model file format at byte {offset}: {detail}")]
    ModelFormat { offset: u64, detail: String },
}

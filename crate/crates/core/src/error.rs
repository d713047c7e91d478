use std::io;

use thiserror::Error;

/// Errors produced anywhere in the extraction / reconstruction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("data length {actual} does not match shape {shape:?} (expected {expected})")]
    LengthMismatch {
        shape: Vec<usize>,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },
    #[error("invalid shape {0:?}: rank must be 1..=4 and every extent >= 1")]
    BadShape(Vec<usize>),
    #[error("cannot transform an empty signal")]
    EmptySignal,
    #[error("invalid axis set {axes:?} for rank {rank}")]
    BadAxis { axes: Vec<usize>, rank: usize },
    #[error("tensor with {0} elements is too large for the direct-sum oracle")]
    TooLarge(usize),
    #[error("frequency ratio {0} outside (0, 1]")]
    BadRatio(f64),
    #[error("missing tensor `{0}`")]
    MissingTensor(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("rank mismatch: expected {expected}, got {actual}")]
    RankMismatch { expected: usize, actual: usize },
    #[error("decay rate {0} must be strictly positive")]
    NonPositiveGamma(f64),
    #[error("lambda {0} outside [0, 1]")]
    BadLambda(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("duplicate tensor name `{0}`")]
    DuplicateName(String),
    #[error("bad magic bytes {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt manifest: {0}")]
    CorruptManifest(String),
    #[error("truncated payload for tensor `{0}`")]
    TruncatedPayload(String),
    #[error("group `{group}` references unresolved tensor `{name}`")]
    UnresolvedName { group: String, name: String },
    #[error("tensor `{name}` claimed by both `{first}` and `{second}`")]
    Overlap {
        name: String,
        first: String,
        second: String,
    },
    #[error("invalid grouping config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

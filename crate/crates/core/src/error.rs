use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported PGM magic number {magic:?} at byte {offset}")]
    UnsupportedMagic { magic: String, offset: usize },

    #[error("malformed PGM header at byte {offset}: {reason}")]
    MalformedHeader { offset: usize, reason: String },

    #[error("truncated PGM payload at byte {offset}: expected {expected} samples, found {found}")]
    TruncatedPayload {
        offset: usize,
        expected: usize,
        found: usize,
    },

    #[error("invalid dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("threshold {0} outside the open interval (0, 1)")]
    InvalidThreshold(f64),

    #[error("erosion never terminates: mask has no background pixel and the border is treated as foreground")]
    NonTerminating,

    #[error("empty mask: {0}")]
    EmptyMask(&'static str),

    #[error("empty point set")]
    EmptyPointSet,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("degenerate pose: all joints coincide, alignment is undefined")]
    DegeneratePose,

    #[error("invalid low-resolution factor {factor} for a {width}x{height} image")]
    InvalidFactor {
        factor: usize,
        width: usize,
        height: usize,
    },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("json error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

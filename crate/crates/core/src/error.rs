use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the container readers and writers in [`crate::io`].
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: &'static str, found: Vec<u8> },
    #[error("unsupported {format} version {version}")]
    UnsupportedVersion { format: &'static str, version: u16 },
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("dimension overflow: {width}x{height}x{frames}")]
    DimensionOverflow { width: u64, height: u64, frames: u64 },
    #[error("trailing bytes after payload: {0}")]
    TrailingBytes(usize),
    #[error("invalid value in payload: {0}")]
    InvalidValue(String),
    #[error("pgm: {0}")]
    Pgm(String),
    #[error("ply: {0}")]
    Ply(String),
    #[error("trajectory: {0}")]
    Trajectory(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FormatError {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FormatError::File { path: path.into(), source }
    }

    /// True when the failure came from the filesystem rather than from
    /// malformed content.
    pub fn is_io(&self) -> bool {
        matches!(self, FormatError::File { .. } | FormatError::Io(_))
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} is {found:?}, expected {expected:?}")]
    DimensionMismatch { what: &'static str, expected: (usize, usize), found: (usize, usize) },
    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("insufficient correspondences: {found} (need at least {required})")]
    InsufficientPairs { found: usize, required: usize },
    #[error("zero spread: all canonical points coincide")]
    ZeroSpread,
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("frame {index} out of range (frame count {count})")]
    FrameOutOfRange { index: usize, count: usize },
    #[error("frame count mismatch: proxy has {proxy}, trajectory has {trajectory}")]
    FrameCountMismatch { proxy: usize, trajectory: usize },
    #[error("composite has no overlapping frames")]
    EmptyOverlap,
    #[error("look-at is degenerate: {0}")]
    DegenerateLookAt(&'static str),
    #[error("every frame is degenerate; nothing to align")]
    AllDegenerate,
    #[error("missing input file {0}")]
    MissingInput(PathBuf),
    #[error(transparent)]
    Format(#[from] FormatError),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Format(FormatError::Io(e))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

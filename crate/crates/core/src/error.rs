use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(f64),

    #[error("mask selects no valid depth pixels")]
    EmptyMask,

    #[error("mask has fewer than 2 set pixels")]
    TooFewMaskPixels,

    #[error("degenerate orientation: principal axes are isotropic")]
    DegenerateOrientation,

    #[error("rotation matrix is not orthonormal with determinant +1")]
    InvalidRotation,

    #[error("{axis} index {index} out of range for grid of {len}")]
    IndexOutOfRange {
        axis: &'static str,
        index: usize,
        len: usize,
    },

    #[error("scene log is empty")]
    EmptySceneLog,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed record at line {line}: {msg}")]
    Malformed { line: usize, msg: String },

    #[error("unsupported format version {found} (supported: {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("grid mismatch: file has {found}, run expects {expected}")]
    GridMismatch { found: String, expected: String },

    #[error("architecture mismatch: {0}")]
    ArchMismatch(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

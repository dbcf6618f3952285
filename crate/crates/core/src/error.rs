use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("points must have at least 2 coordinates, found {0}")]
    TooFewDimensions(usize),

    #[error("non-finite coordinate in point {index}")]
    NonFinite { index: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("duplicate dataset id {0}")]
    DuplicateId(u64),

    #[error("unknown dataset id {0}")]
    UnknownDataset(u64),

    #[error("cell coordinate {value} out of range for resolution {theta}")]
    CellOutOfRange { value: u64, theta: u32 },

    #[error("point lies outside the grid")]
    OutsideGrid,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error("snapshot checksum mismatch")]
    Checksum,

    #[error("snapshot format version {found} is not supported (expected {expected})")]
    Version { expected: u32, found: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

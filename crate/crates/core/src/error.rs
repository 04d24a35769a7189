//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A box with zero width or height where a positive-area box is required.
    #[error("degenerate box")]
    DegenerateBox,

    /// A response frame violating its grid contract.
    #[error("invalid response frame: {0}")]
    InvalidResponseFrame(String),

    /// An observation arrived with an empty candidate set.
    #[error("no candidates")]
    NoCandidates,

    /// Observations must be contiguous in frame index.
    #[error("non-contiguous frame indices: expected {expected}, got {got}")]
    NonContiguousFrames { expected: u64, got: u64 },

    /// Trajectory and ground truth must cover the same frames.
    #[error("length mismatch: trajectory has {traj} frames, ground truth has {gt}")]
    LengthMismatch { traj: usize, gt: usize },

    /// The innovation covariance could not be inverted.
    #[error("innovation covariance not invertible")]
    SingularInnovation,

    /// A configuration value outside its documented range.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A malformed record in one of the line-delimited file formats.
    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    /// A subset references a sequence absent from the results.
    #[error("unknown sequence in subset '{subset}': {sequence}")]
    UnknownSequence { subset: String, sequence: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn config(message: impl Into<String>) -> Self {
        Error::InvalidConfig(message.into())
    }
}

//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {op}: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        op: &'static str,
        expected: Vec<usize>,
        got: Vec<usize>,
    },

    #[error("non-finite value produced by {op}")]
    NonFinite { op: String },

    #[error("backward called on {layer} without a cached forward pass")]
    MissingCache { layer: &'static str },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("channel {0:?} is not present in the montage")]
    UnknownChannel(String),

    #[error("channel {0:?} has no neighbours within the distance threshold")]
    NoNeighbours(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("signal of length {len} is too short (needs more than {min} samples)")]
    SignalTooShort { len: usize, min: usize },

    #[error("noisy window {window} has no preceding clean window (cold start)")]
    ColdStart { window: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("non-finite loss at epoch {epoch} (component {component})")]
    NonFiniteLoss { epoch: usize, component: &'static str },

    #[error("bad checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, expected: &[usize], got: &[usize]) -> Self {
        Error::ShapeMismatch {
            op,
            expected: expected.to_vec(),
            got: got.to_vec(),
        }
    }
}

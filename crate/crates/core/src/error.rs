use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid action index {0}, expected 0..=7")]
    InvalidAction(usize),

    #[error("invalid configuration: {field}: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("pose ({x:.3}, {y:.3}) is outside the {what}")]
    PoseOutOfBounds { x: f64, y: f64, what: &'static str },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("pyramid with {levels} levels does not fit a grid whose smaller side is {min_dim} cells")]
    TooManyLevels { levels: usize, min_dim: usize },

    #[error("grid has no occupied cells")]
    NoOccupiedCells,

    #[error("occupied cells span a degenerate box (area {area:.3} px^2)")]
    DegenerateBox { area: f64 },

    #[error("{which} pixel ({x:.1}, {y:.1}) is not a free cell")]
    BlockedEndpoint { which: &'static str, x: f64, y: f64 },

    #[error("degenerate transform: {0}")]
    DegenerateTransform(&'static str),

    #[error("no path found within {iterations} iterations")]
    NoPath { iterations: usize },

    #[error("backward called without a recorded forward pass")]
    NoForwardRecorded,

    #[error("non-finite gradient at parameter {index}: {value}")]
    NonFiniteGradient { index: usize, value: f64 },

    #[error("non-finite loss {loss} at episode {episode}, step {step}")]
    NonFiniteLoss { loss: f64, episode: usize, step: u64 },

    #[error("empty batch")]
    EmptyBatch,

    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },

    #[error("malformed {what}: {reason}")]
    Parse { what: &'static str, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit status for this error: 2 for I/O failures, 3 when the
    /// planner finds no path, 1 for everything else (bad configuration,
    /// malformed input, diverged training).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            Error::Csv(e) if e.is_io_error() => 2,
            Error::Json(e) if e.is_io() => 2,
            Error::NoPath { .. } => 3,
            _ => 1,
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

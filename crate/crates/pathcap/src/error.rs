use thiserror::Error;

/// Errors produced by the pathcap library.
#[derive(Error, Debug)]
pub enum Error {
    #[error("input shape mismatch: expected length {expected}, got {got}")]
    InputShape { expected: usize, got: usize },

    #[error("path enumeration too large: {count} paths exceeds cap {cap}")]
    EnumerationTooLarge { count: u128, cap: u128 },

    #[error("unsupported topology: {0}")]
    UnsupportedTopology(String),

    #[error("degenerate skeleton: negative basis path {index} has zero value")]
    DegenerateSkeleton { index: usize },

    #[error("division by zero weight at layer {layer}, entry ({row},{col})")]
    ZeroWeight { layer: usize, row: usize, col: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid network spec: {0}")]
    InvalidSpec(String),

    #[error("checkpoint parse error at {context}: {message}")]
    CheckpointParse { context: String, message: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("training diverged at step {step}: loss = {loss}")]
    Diverged { step: usize, loss: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

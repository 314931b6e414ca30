use std::io;

use thiserror::Error;

/// Errors produced by the dynamo solver library.
#[derive(Debug, Error)]
pub enum DynamoError {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("grid too coarse: {0}")]
    Resolution(String),

    #[error("size mismatch: expected {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("radius {radius} outside the domain [0, {outer}]")]
    RadiusOutOfDomain { radius: f64, outer: f64 },

    #[error("operator is singular at r = 0")]
    SingularOrigin,

    #[error("singular mode system for degree {degree}")]
    SingularSystem { degree: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("solution diverged at step {step}: mode (l={degree}, m={order}) has |coefficient| = {magnitude:e}")]
    Divergence {
        step: u64,
        degree: usize,
        order: usize,
        magnitude: f64,
    },

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error("snapshot checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    Checksum { stored: u32, computed: u32 },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, DynamoError>;

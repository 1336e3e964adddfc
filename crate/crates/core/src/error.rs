use std::io;

use thiserror::Error;

/// Errors raised anywhere in the secure learner stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} out of encodable range for {precision_bits} precision bits")]
    EncodingRange { value: f64, precision_bits: u32 },

    #[error("invalid fixed-point precision {0} (expected 0 < L < 32)")]
    InvalidPrecision(u32),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("party count mismatch: expected {expected}, got {got}")]
    PartyCount { expected: usize, got: usize },

    #[error("preprocessing store exhausted: {0}")]
    Exhausted(String),

    #[error("preprocessing item {index} already consumed by party {party}")]
    AlreadyConsumed { index: usize, party: usize },

    #[error("preprocessing desync at item {index}: expected {expected}, requested {requested}")]
    PreprocessingDesync {
        index: usize,
        expected: String,
        requested: String,
    },

    #[error("protocol desync on link {from}->{to}: {detail}")]
    Desync {
        from: usize,
        to: usize,
        detail: String,
    },

    #[error("timed out waiting for node {peer} during '{label}'")]
    Timeout { peer: usize, label: String },

    #[error("peer {0} disconnected")]
    Disconnected(usize),

    #[error("role check failed: {0}")]
    Role(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error("party thread panicked: {0}")]
    Panicked(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

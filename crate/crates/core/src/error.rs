//! Error type shared across the crate.

use std::path::PathBuf;

/// Unified error for all library operations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Tensor/layer shape mismatch; names both offending shapes.
    #[error("shape mismatch in {op}: expected {expected}, got {got}")]
    Shape {
        op: &'static str,
        expected: String,
        got: String,
    },

    /// Malformed binary or text file; reports the byte offset where parsing failed.
    #[error("format error in {path:?} at byte {offset}: {msg}")]
    Format {
        path: PathBuf,
        offset: u64,
        msg: String,
    },

    /// Unknown action name or class id outside the label space.
    #[error("label error: {0}")]
    Label(String),

    /// Paired artifacts disagree (e.g. label line count vs. feature frame count).
    #[error("consistency error: {0}")]
    Consistency(String),

    /// Invalid or unparsable configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Empty or unusable data selection.
    #[error("data error: {0}")]
    Data(String),

    /// Replay budget cannot be met (e.g. fewer videos than past tasks).
    #[error("budget error: {0}")]
    Budget(String),

    /// A cached decoder required for replay generation is missing.
    #[error("cache error: {0}")]
    Cache(String),

    /// Sampling from an empty sequence pool.
    #[error("pool error: {0}")]
    Pool(String),

    /// A loss closure handed to the gradient checker is not deterministic.
    #[error("determinism error: {0}")]
    Determinism(String),

    /// Non-finite values or a failed numerical check.
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn shape(op: &'static str, expected: impl Into<String>, got: impl Into<String>) -> Self {
        Error::Shape {
            op,
            expected: expected.into(),
            got: got.into(),
        }
    }
}

//! Incremental temporal action segmentation with generative data replay.
//!
//! The library trains a frame-wise action segmentation model over a sequence
//! of tasks. Forgetting is mitigated by replaying synthesized videos: a
//! Temporally Coherent Action (TCA) conditional VAE learns per-task action
//! features conditioned on the action label and a coherence variable (the
//! relative progression of a frame within its segment), and replay videos are
//! assembled top-down from stored symbolic sequence structures.
//!
//! All math is generic over the scalar type via [`numeric::Scalar`]; the
//! aliases below fix the default double-precision pipeline, which the
//! gradient-check tolerances assume.

pub mod checkpoint;
pub mod config;
pub mod data;
pub mod error;
pub mod metrics;
pub mod numeric;
pub mod pipeline;
pub mod replay;
pub mod seg;
pub mod tca;
pub mod trainer;

pub use error::{Error, Result};

/// Default scalar for the full pipeline.
pub type Real = f64;
/// Default-precision matrix.
pub type Mat = numeric::Matrix<Real>;

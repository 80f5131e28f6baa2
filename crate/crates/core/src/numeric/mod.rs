//! Minimal differentiable building blocks.
//!
//! Everything here is scalar-generic over [`Scalar`] (f32 or f64) with explicit
//! forward/backward passes; there is no general autodiff graph. Each model
//! hard-codes its backward chain and exposes its parameters through
//! [`Parameterized`] so the optimizer, the checkpoint writer and the gradient
//! checker can walk them in a fixed order.

mod activations;
mod adam;
mod conv;
mod dense;
mod gradcheck;
mod matrix;
mod rng;

pub use activations::{
    log_softmax_backward, log_softmax_rows, relu_backward, relu_rows, softmax_backward,
    softmax_rows,
};
pub use adam::OptimizerState;
pub use conv::{dilated_conv1d_backward, dilated_conv1d_forward, CONV_KERNEL};
pub use dense::{linear_backward, linear_forward, LayerParams};
pub use gradcheck::{gradcheck, GradCheckConfig, GradCheckReport, WorstCoordinate};
pub use matrix::Matrix;
pub use rng::RandomSource;

use num_traits::Float;
use std::fmt;
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

/// Floating-point scalar the numeric stack is generic over.
///
/// `Float` brings `NumCast`, so `T::from(x).unwrap()` and `x.to_f64().unwrap()`
/// are both available for moving constants across the boundary.
pub trait Scalar:
    Float
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + fmt::Debug
    + fmt::Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Shorthand for lossy conversion from `f64` constants.
    fn cast(x: f64) -> Self {
        Self::from(x).expect("f64 constant representable in scalar type")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Fixed-order access to a model's trainable parameter blocks.
///
/// The returned order must be stable across calls; it defines the layout of
/// optimizer state and checkpoints.
pub trait Parameterized<T: Scalar> {
    fn params(&self) -> Vec<(String, &LayerParams<T>)>;
    fn params_mut(&mut self) -> Vec<(String, &mut LayerParams<T>)>;

    /// Zeroes every gradient accumulator.
    fn zero_grad(&mut self) {
        for (_, p) in self.params_mut() {
            p.zero_grad();
        }
    }
}

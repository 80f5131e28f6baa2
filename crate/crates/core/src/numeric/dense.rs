//! Dense layer parameters and the affine forward/backward pair.

use super::{Matrix, RandomSource, Scalar};
use crate::error::{Error, Result};

/// Weights, bias, and gradient accumulators of identical shape.
///
/// Weights are `in_dim × out_dim` so a batch of rows maps as `x @ W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<T> {
    pub weights: Matrix<T>,
    pub bias: Vec<T>,
    pub grad_weights: Matrix<T>,
    pub grad_bias: Vec<T>,
}

impl<T: Scalar> LayerParams<T> {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            weights: Matrix::zeros(in_dim, out_dim),
            bias: vec![T::zero(); out_dim],
            grad_weights: Matrix::zeros(in_dim, out_dim),
            grad_bias: vec![T::zero(); out_dim],
        }
    }

    /// Uniform init in ±1/√fan_in; bias starts at zero.
    pub fn init_uniform(in_dim: usize, out_dim: usize, rng: &mut RandomSource) -> Self {
        let mut p = Self::zeros(in_dim, out_dim);
        let limit = T::one() / T::cast(in_dim as f64).sqrt();
        for w in p.weights.data_mut() {
            *w = rng.uniform_in(-limit, limit);
        }
        p
    }

    pub fn in_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn zero_grad(&mut self) {
        self.grad_weights.fill(T::zero());
        self.grad_bias.fill(T::zero());
    }

    pub fn param_count(&self) -> usize {
        self.weights.data().len() + self.bias.len()
    }

    /// Flat read access: weights first (row-major), then bias.
    pub fn coord(&self, i: usize) -> T {
        let nw = self.weights.data().len();
        if i < nw {
            self.weights.data()[i]
        } else {
            self.bias[i - nw]
        }
    }

    pub fn coord_add(&mut self, i: usize, delta: T) {
        let nw = self.weights.data().len();
        if i < nw {
            self.weights.data_mut()[i] += delta;
        } else {
            self.bias[i - nw] += delta;
        }
    }

    /// Flat gradient access, same layout as [`coord`](Self::coord).
    pub fn grad_coord(&self, i: usize) -> T {
        let nw = self.grad_weights.data().len();
        if i < nw {
            self.grad_weights.data()[i]
        } else {
            self.grad_bias[i - nw]
        }
    }
}

/// `input @ W + b`, bias broadcast per row.
pub fn linear_forward<T: Scalar>(params: &LayerParams<T>, input: &Matrix<T>) -> Result<Matrix<T>> {
    if input.cols() != params.in_dim() {
        return Err(Error::shape(
            "linear_forward",
            format!("input cols = {}", params.in_dim()),
            format!("{}x{}", input.rows(), input.cols()),
        ));
    }
    let mut out = input.matmul(&params.weights);
    for r in 0..out.rows() {
        for (o, &b) in out.row_mut(r).iter_mut().zip(&params.bias) {
            *o += b;
        }
    }
    Ok(out)
}

/// Returns the gradient w.r.t. the input and accumulates parameter gradients
/// (additive across calls).
pub fn linear_backward<T: Scalar>(
    params: &mut LayerParams<T>,
    input: &Matrix<T>,
    grad_out: &Matrix<T>,
) -> Result<Matrix<T>> {
    if input.cols() != params.in_dim() || grad_out.cols() != params.out_dim()
        || input.rows() != grad_out.rows()
    {
        return Err(Error::shape(
            "linear_backward",
            format!(
                "input {}x{}, grad_out {}x{}",
                input.rows(),
                params.in_dim(),
                input.rows(),
                params.out_dim()
            ),
            format!(
                "input {}x{}, grad_out {}x{}",
                input.rows(),
                input.cols(),
                grad_out.rows(),
                grad_out.cols()
            ),
        ));
    }
    params.grad_weights.add_assign(&input.matmul_tn(grad_out));
    for r in 0..grad_out.rows() {
        for (gb, &g) in params.grad_bias.iter_mut().zip(grad_out.row(r)) {
            *gb += g;
        }
    }
    Ok(grad_out.matmul_nt(&params.weights))
}

//! Dilated 1-D convolution over time (kernel size 3, zero padding).
//!
//! Weights live in a [`LayerParams`] whose weight matrix is `(3·C_in) × C_out`:
//! tap k ∈ {-1, 0, +1} occupies the row block `[(k+1)·C_in, (k+2)·C_in)`.
//! Output length always equals input length; taps that fall off either border
//! read zero padding.

use super::{LayerParams, Matrix, Scalar};
use crate::error::{Error, Result};

/// Temporal kernel size; fixed at 3 taps (t−d, t, t+d).
pub const CONV_KERNEL: usize = 3;

fn check_dims<T: Scalar>(
    op: &'static str,
    params: &LayerParams<T>,
    input: &Matrix<T>,
    dilation: usize,
) -> Result<usize> {
    if dilation == 0 {
        return Err(Error::Numeric(format!("{op}: dilation must be >= 1")));
    }
    if params.in_dim() % CONV_KERNEL != 0 || params.in_dim() / CONV_KERNEL != input.cols() {
        return Err(Error::shape(
            op,
            format!("weights ({}·C_in) x C_out with C_in = {}", CONV_KERNEL, input.cols()),
            format!("weights {}x{}", params.in_dim(), params.out_dim()),
        ));
    }
    Ok(input.cols())
}

/// Forward pass: `out[t] = b + Σ_k W_k · x[t + (k−1)·d]` with zero padding.
pub fn dilated_conv1d_forward<T: Scalar>(
    params: &LayerParams<T>,
    input: &Matrix<T>,
    dilation: usize,
) -> Result<Matrix<T>> {
    let c_in = check_dims("dilated_conv1d_forward", params, input, dilation)?;
    let frames = input.rows();
    let c_out = params.out_dim();
    let mut out = Matrix::zeros(frames, c_out);
    for t in 0..frames {
        let row = out.row_mut(t);
        row.copy_from_slice(&params.bias);
        for k in 0..CONV_KERNEL {
            let offset = (k as isize - 1) * dilation as isize;
            let src = t as isize + offset;
            if src < 0 || src >= frames as isize {
                continue;
            }
            let x = input.row(src as usize);
            for (c, &xv) in x.iter().enumerate() {
                if xv == T::zero() {
                    continue;
                }
                let w = params.weights.row(k * c_in + c);
                for (o, &wv) in row.iter_mut().zip(w) {
                    *o += xv * wv;
                }
            }
        }
    }
    Ok(out)
}

/// Backward pass; returns grad w.r.t. the input, accumulates into `params`.
pub fn dilated_conv1d_backward<T: Scalar>(
    params: &mut LayerParams<T>,
    input: &Matrix<T>,
    grad_out: &Matrix<T>,
    dilation: usize,
) -> Result<Matrix<T>> {
    let c_in = check_dims("dilated_conv1d_backward", params, input, dilation)?;
    if grad_out.rows() != input.rows() || grad_out.cols() != params.out_dim() {
        return Err(Error::shape(
            "dilated_conv1d_backward",
            format!("grad_out {}x{}", input.rows(), params.out_dim()),
            format!("grad_out {}x{}", grad_out.rows(), grad_out.cols()),
        ));
    }
    let frames = input.rows();
    let c_out = params.out_dim();
    let mut grad_in = Matrix::zeros(frames, c_in);
    for t in 0..frames {
        let g = grad_out.row(t);
        for (gb, &gv) in params.grad_bias.iter_mut().zip(g) {
            *gb += gv;
        }
        for k in 0..CONV_KERNEL {
            let offset = (k as isize - 1) * dilation as isize;
            let src = t as isize + offset;
            if src < 0 || src >= frames as isize {
                continue;
            }
            let src = src as usize;
            for c in 0..c_in {
                let xv = input.get(src, c);
                let w_row = k * c_in + c;
                let mut gi = T::zero();
                for o in 0..c_out {
                    let gv = g[o];
                    gi += gv * params.weights.get(w_row, o);
                    params.grad_weights.data_mut()[w_row * c_out + o] += gv * xv;
                }
                grad_in.data_mut()[src * c_in + c] += gi;
            }
        }
    }
    Ok(grad_in)
}

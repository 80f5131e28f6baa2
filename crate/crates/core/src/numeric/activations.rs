//! Element-wise and row-wise activations with explicit backward passes.

use super::{Matrix, Scalar};

/// ReLU applied element-wise.
pub fn relu_rows<T: Scalar>(input: &Matrix<T>) -> Matrix<T> {
    input.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Gradient through ReLU given the pre-activation input.
pub fn relu_backward<T: Scalar>(input: &Matrix<T>, grad_out: &Matrix<T>) -> Matrix<T> {
    assert_eq!((input.rows(), input.cols()), (grad_out.rows(), grad_out.cols()));
    let mut g = grad_out.clone();
    for (gv, &x) in g.data_mut().iter_mut().zip(input.data()) {
        if x <= T::zero() {
            *gv = T::zero();
        }
    }
    g
}

/// Row-wise softmax computed stably (max subtraction).
pub fn softmax_rows<T: Scalar>(logits: &Matrix<T>) -> Matrix<T> {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().cloned().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Row-wise log-softmax: `x - max - log Σ exp(x - max)`.
pub fn log_softmax_rows<T: Scalar>(logits: &Matrix<T>) -> Matrix<T> {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().cloned().fold(T::neg_infinity(), T::max);
        let log_sum = row
            .iter()
            .map(|&v| (v - max).exp())
            .fold(T::zero(), |a, b| a + b)
            .ln();
        for v in row.iter_mut() {
            *v = *v - max - log_sum;
        }
    }
    out
}

/// Gradient w.r.t. logits given grad w.r.t. softmax output and the softmax
/// output itself: per row `s ⊙ (g − (g·s))`.
pub fn softmax_backward<T: Scalar>(softmax_out: &Matrix<T>, grad_out: &Matrix<T>) -> Matrix<T> {
    assert_eq!(
        (softmax_out.rows(), softmax_out.cols()),
        (grad_out.rows(), grad_out.cols())
    );
    let mut grad_in = Matrix::zeros(grad_out.rows(), grad_out.cols());
    for r in 0..grad_out.rows() {
        let s = softmax_out.row(r);
        let g = grad_out.row(r);
        let dot: T = s.iter().zip(g).map(|(&a, &b)| a * b).sum();
        for (o, (&sv, &gv)) in grad_in.row_mut(r).iter_mut().zip(s.iter().zip(g)) {
            *o = sv * (gv - dot);
        }
    }
    grad_in
}

/// Gradient w.r.t. logits given grad w.r.t. log-softmax output: per row
/// `g − softmax · Σ g`.
pub fn log_softmax_backward<T: Scalar>(log_softmax_out: &Matrix<T>, grad_out: &Matrix<T>) -> Matrix<T> {
    assert_eq!(
        (log_softmax_out.rows(), log_softmax_out.cols()),
        (grad_out.rows(), grad_out.cols())
    );
    let mut grad_in = grad_out.clone();
    for r in 0..grad_out.rows() {
        let g_sum: T = grad_out.row(r).iter().cloned().sum();
        for (o, &lsm) in grad_in.row_mut(r).iter_mut().zip(log_softmax_out.row(r)) {
            *o = *o - lsm.exp() * g_sum;
        }
    }
    grad_in
}

//! Adaptive-moment optimizer with bias correction.

use super::{LayerParams, Matrix, Scalar};

/// Per-parameter first/second moment estimates plus the shared step counter.
///
/// Moments are allocated lazily on the first step, keyed by the position of
/// each block in the `params` slice, which is why callers must pass blocks in
/// a fixed order (see [`super::Parameterized`]).
#[derive(Debug, Clone)]
pub struct OptimizerState<T> {
    lr: T,
    beta1: T,
    beta2: T,
    eps: T,
    step: u64,
    moments: Vec<BlockMoments<T>>,
}

#[derive(Debug, Clone)]
struct BlockMoments<T> {
    m_weights: Matrix<T>,
    v_weights: Matrix<T>,
    m_bias: Vec<T>,
    v_bias: Vec<T>,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(lr: T) -> Self {
        Self {
            lr,
            beta1: T::cast(0.9),
            beta2: T::cast(0.999),
            eps: T::cast(1e-8),
            step: 0,
            moments: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update over every parameter block, consuming the accumulated
    /// gradients (they are left untouched; callers zero them per iteration).
    pub fn step(&mut self, params: &mut [(String, &mut LayerParams<T>)]) {
        if self.moments.is_empty() {
            self.moments = params
                .iter()
                .map(|(_, p)| BlockMoments {
                    m_weights: Matrix::zeros(p.weights.rows(), p.weights.cols()),
                    v_weights: Matrix::zeros(p.weights.rows(), p.weights.cols()),
                    m_bias: vec![T::zero(); p.bias.len()],
                    v_bias: vec![T::zero(); p.bias.len()],
                })
                .collect();
        }
        assert_eq!(self.moments.len(), params.len(), "parameter block count changed");

        self.step += 1;
        let t = self.step as i32;
        let corr1 = T::one() - self.beta1.powi(t);
        let corr2 = T::one() - self.beta2.powi(t);

        for ((_, p), mom) in params.iter_mut().zip(&mut self.moments) {
            update(
                p.weights.data_mut(),
                p.grad_weights.data(),
                mom.m_weights.data_mut(),
                mom.v_weights.data_mut(),
                self.lr,
                self.beta1,
                self.beta2,
                self.eps,
                corr1,
                corr2,
            );
            update(
                &mut p.bias,
                &p.grad_bias,
                &mut mom.m_bias,
                &mut mom.v_bias,
                self.lr,
                self.beta1,
                self.beta2,
                self.eps,
                corr1,
                corr2,
            );
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn update<T: Scalar>(
    values: &mut [T],
    grads: &[T],
    m: &mut [T],
    v: &mut [T],
    lr: T,
    beta1: T,
    beta2: T,
    eps: T,
    corr1: T,
    corr2: T,
) {
    for i in 0..values.len() {
        let g = grads[i];
        m[i] = beta1 * m[i] + (T::one() - beta1) * g;
        v[i] = beta2 * v[i] + (T::one() - beta2) * g * g;
        let m_hat = m[i] / corr1;
        let v_hat = v[i] / corr2;
        values[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut p = LayerParams::<f64>::zeros(2, 2);
        p.weights.set(0, 0, 1.25);
        p.bias[1] = -0.5;
        let before = p.clone();
        let mut opt = OptimizerState::new(0.01);
        opt.step(&mut [("p".to_string(), &mut p)]);
        assert_eq!(p.weights, before.weights);
        assert_eq!(p.bias, before.bias);
        assert_eq!(opt.step_count(), 1);
    }

    #[test]
    fn constant_gradient_moves_against_its_sign() {
        let mut p = LayerParams::<f64>::zeros(1, 1);
        let mut opt = OptimizerState::new(0.01);
        for _ in 0..50 {
            p.zero_grad();
            p.grad_weights.set(0, 0, 3.0);
            p.grad_bias[0] = -2.0;
            opt.step(&mut [("p".to_string(), &mut p)]);
        }
        assert!(p.weights.get(0, 0) < 0.0);
        assert!(p.bias[0] > 0.0);
    }

    #[test]
    fn quadratic_loss_converges_to_minimizer() {
        // L(w) = (w - 3)^2, minimizer w* = 3.
        let mut p = LayerParams::<f64>::zeros(1, 1);
        let mut opt = OptimizerState::new(1e-2);
        for _ in 0..2000 {
            p.zero_grad();
            let w = p.weights.get(0, 0);
            p.grad_weights.set(0, 0, 2.0 * (w - 3.0));
            opt.step(&mut [("p".to_string(), &mut p)]);
        }
        assert!(
            (p.weights.get(0, 0) - 3.0).abs() < 1e-3,
            "w = {}",
            p.weights.get(0, 0)
        );
    }
}

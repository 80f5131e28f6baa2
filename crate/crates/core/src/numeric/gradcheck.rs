//! Central-difference gradient checker.
//!
//! The loss closure must be deterministic (same model state ⇒ bit-identical
//! loss); closures that sample noise should rebuild their random source from a
//! fixed seed on every call. Coordinates where the loss is locally non-smooth
//! (ReLU kinks, clamp corners) are detected by comparing two stencil widths
//! and excluded: central differences carry no information there.

use super::{Parameterized, RandomSource, Scalar};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct GradCheckConfig {
    /// Central-difference step.
    pub step: f64,
    /// Maximum allowed relative error.
    pub tolerance: f64,
    /// Cap on coordinates checked per parameter block; `None` checks all.
    pub max_coords_per_block: Option<usize>,
    /// Seed for coordinate subsampling when a cap is set.
    pub sample_seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            step: 1e-5,
            tolerance: 1e-4,
            max_coords_per_block: None,
            sample_seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WorstCoordinate {
    pub block: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst: Option<WorstCoordinate>,
    pub coords_checked: usize,
    /// Coordinates excluded because two stencil widths disagreed (non-smooth point).
    pub coords_skipped: usize,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err <= self.tolerance
    }

    pub fn summary(&self) -> String {
        match &self.worst {
            Some(w) => format!(
                "max rel err {:.3e} (tol {:.1e}) at {}[{}]: analytic {:.6e} vs numeric {:.6e}; {} checked, {} skipped",
                self.max_rel_err,
                self.tolerance,
                w.block,
                w.index,
                w.analytic,
                w.numeric,
                self.coords_checked,
                self.coords_skipped
            ),
            None => "no coordinates checked".to_string(),
        }
    }
}

/// Relative error with a floor so near-zero gradient pairs compare absolutely.
fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-3)
}

/// Checks analytic gradients of `loss` against central finite differences.
///
/// `loss` must zero the accumulators, run forward + backward, and return the
/// loss value; analytic gradients are read from the parameter blocks after one
/// call at the unperturbed point.
pub fn gradcheck<T, M, F>(model: &mut M, mut loss: F, cfg: &GradCheckConfig) -> Result<GradCheckReport>
where
    T: Scalar,
    M: Parameterized<T>,
    F: FnMut(&mut M) -> T,
{
    let l0 = loss(model).to_f64().unwrap();
    let l1 = loss(model).to_f64().unwrap();
    if l0.to_bits() != l1.to_bits() {
        return Err(Error::Determinism(format!(
            "loss closure returned {l0} then {l1} on identical state"
        )));
    }
    if !l0.is_finite() {
        return Err(Error::Numeric(format!("loss is not finite: {l0}")));
    }

    // Analytic gradients at the base point.
    let analytic: Vec<(String, Vec<f64>)> = model
        .params()
        .iter()
        .map(|(name, p)| {
            let n = p.param_count();
            (name.clone(), (0..n).map(|i| p.grad_coord(i).to_f64().unwrap()).collect())
        })
        .collect();

    let h = cfg.step;
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst: None,
        coords_checked: 0,
        coords_skipped: 0,
        tolerance: cfg.tolerance,
    };

    let block_count = analytic.len();
    for block in 0..block_count {
        let (name, grads) = (analytic[block].0.clone(), &analytic[block].1);
        let n = grads.len();
        let coords: Vec<usize> = match cfg.max_coords_per_block {
            Some(cap) if cap < n => {
                let mut rng = RandomSource::new(cfg.sample_seed).substream(&name);
                let mut all: Vec<usize> = (0..n).collect();
                rng.shuffle(&mut all);
                all.truncate(cap);
                all
            }
            _ => (0..n).collect(),
        };

        for i in coords {
            let eval = |model: &mut M, loss: &mut F, delta: f64| -> f64 {
                model.params_mut()[block].1.coord_add(i, T::cast(delta));
                let v = loss(model).to_f64().unwrap();
                model.params_mut()[block].1.coord_add(i, T::cast(-delta));
                v
            };
            let lp = eval(model, &mut loss, h);
            let lm = eval(model, &mut loss, -h);
            let d_wide = (lp - lm) / (2.0 * h);
            let lp2 = eval(model, &mut loss, h / 2.0);
            let lm2 = eval(model, &mut loss, -h / 2.0);
            let d_narrow = (lp2 - lm2) / h;

            // A smooth loss gives stencil agreement to O(h²); disagreement
            // beyond the check tolerance marks a kink crossing.
            if rel_err(d_wide, d_narrow) > cfg.tolerance {
                report.coords_skipped += 1;
                continue;
            }

            let numeric = d_narrow;
            let a = grads[i];
            let e = rel_err(a, numeric);
            report.coords_checked += 1;
            if e > report.max_rel_err {
                report.max_rel_err = e;
                report.worst = Some(WorstCoordinate {
                    block: name.clone(),
                    index: i,
                    analytic: a,
                    numeric,
                    rel_err: e,
                });
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{linear_backward, linear_forward, LayerParams, Matrix};

    struct Toy {
        layer: LayerParams<f64>,
        input: Matrix<f64>,
        target: Matrix<f64>,
    }

    impl Parameterized<f64> for Toy {
        fn params(&self) -> Vec<(String, &LayerParams<f64>)> {
            vec![("layer".to_string(), &self.layer)]
        }
        fn params_mut(&mut self) -> Vec<(String, &mut LayerParams<f64>)> {
            vec![("layer".to_string(), &mut self.layer)]
        }
    }

    fn toy() -> Toy {
        let mut rng = RandomSource::new(21);
        let mut layer = LayerParams::init_uniform(4, 3, &mut rng);
        for b in layer.bias.iter_mut() {
            *b = rng.uniform_in(-0.5, 0.5);
        }
        let mut input = Matrix::zeros(3, 4);
        for v in input.data_mut() {
            *v = rng.uniform_in(-1.0, 1.0);
        }
        let mut target = Matrix::zeros(3, 3);
        for v in target.data_mut() {
            *v = rng.uniform_in(-1.0, 1.0);
        }
        Toy { layer, input, target }
    }

    /// Mean squared error over all entries; dL/dy = 2(y - t)/N.
    fn mse_loss(toy: &mut Toy) -> f64 {
        toy.zero_grad();
        let y = linear_forward(&toy.layer, &toy.input).unwrap();
        let n = (y.rows() * y.cols()) as f64;
        let loss = y.sq_distance(&toy.target) / n;
        let mut grad = Matrix::zeros(y.rows(), y.cols());
        for i in 0..grad.data().len() {
            grad.data_mut()[i] = 2.0 * (y.data()[i] - toy.target.data()[i]) / n;
        }
        linear_backward(&mut toy.layer, &toy.input, &grad).unwrap();
        loss
    }

    #[test]
    fn linear_mse_passes_tightly() {
        let mut toy = toy();
        let report = gradcheck(&mut toy, mse_loss, &GradCheckConfig::default()).unwrap();
        assert!(report.max_rel_err < 1e-6, "{}", report.summary());
        assert_eq!(report.coords_checked, 15);
    }

    #[test]
    fn random_3x4_layer_passes_spec_tolerance() {
        let mut rng = RandomSource::new(77);
        let mut toy = toy();
        toy.layer = LayerParams::init_uniform(3, 4, &mut rng);
        toy.input = Matrix::zeros(2, 3);
        for v in toy.input.data_mut() {
            *v = rng.uniform_in(-1.0, 1.0);
        }
        toy.target = Matrix::zeros(2, 4);
        for v in toy.target.data_mut() {
            *v = rng.uniform_in(-1.0, 1.0);
        }
        let report = gradcheck(&mut toy, mse_loss, &GradCheckConfig::default()).unwrap();
        assert!(report.passed(), "{}", report.summary());
    }

    #[test]
    fn corrupted_backward_is_caught() {
        let mut toy = toy();
        let bad_loss = |t: &mut Toy| {
            let v = mse_loss(t);
            // Deliberately corrupt one gradient coordinate.
            t.layer.grad_weights.set(0, 0, t.layer.grad_weights.get(0, 0) + 0.5);
            v
        };
        let report = gradcheck(&mut toy, bad_loss, &GradCheckConfig::default()).unwrap();
        assert!(!report.passed());
    }

    #[test]
    fn nondeterministic_closure_is_rejected() {
        let mut toy = toy();
        let mut counter = 0.0;
        let drifting = move |t: &mut Toy| {
            counter += 1.0;
            mse_loss(t) + counter
        };
        let err = gradcheck(&mut toy, drifting, &GradCheckConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Determinism(_)));
    }
}

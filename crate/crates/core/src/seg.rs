//! Frame-wise segmentation backbone and its training losses.
//!
//! The model is a single-stage stack of dilated residual temporal convolutions
//! (kernel 3, dilation 2^l for block l = 1..L, channels C): an input
//! projection D→C, L residual blocks, and an output projection C→A. One logit
//! row per input frame.
//!
//! The training loss is frame-wise cross-entropy plus λ times a truncated
//! smoothing term over adjacent-frame log-probabilities. Matching the
//! convention of the reference backbone implementation, the smoothing term's
//! previous-frame log-probabilities are treated as constants during backward.

use crate::data::{ClassId, SegmentLabeling};
use crate::error::{Error, Result};
use crate::numeric::{
    dilated_conv1d_backward, dilated_conv1d_forward, linear_backward, linear_forward,
    log_softmax_backward, log_softmax_rows, relu_backward, relu_rows, LayerParams, Matrix,
    Parameterized, RandomSource, Scalar, CONV_KERNEL,
};

/// Smoothing weight λ and truncation threshold τ.
#[derive(Debug, Clone, Copy)]
pub struct TasLossConfig {
    pub lambda: f64,
    pub tau: f64,
}

impl Default for TasLossConfig {
    fn default() -> Self {
        Self { lambda: 0.15, tau: 4.0 }
    }
}

impl TasLossConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda < 0.0 {
            return Err(Error::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if self.tau <= 0.0 {
            return Err(Error::Config(format!("tau must be > 0, got {}", self.tau)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct ResidualBlock<T> {
    conv: LayerParams<T>,
    mix: LayerParams<T>,
    dilation: usize,
}

/// Dilated-convolution segmentation model M.
#[derive(Debug, Clone)]
pub struct SegModel<T> {
    in_proj: LayerParams<T>,
    blocks: Vec<ResidualBlock<T>>,
    out_proj: LayerParams<T>,
    /// Global class id of each output column.
    classes: Vec<ClassId>,
    feature_dim: usize,
    channels: usize,
}

impl<T: Scalar> SegModel<T> {
    /// Builds a fresh model with `layers` residual blocks (dilation 2^l for
    /// block l = 1..layers) and an output head over `classes`.
    pub fn new(
        feature_dim: usize,
        channels: usize,
        layers: usize,
        classes: Vec<ClassId>,
        rng: &mut RandomSource,
    ) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::Config("segmentation model needs at least one class".into()));
        }
        let mut seen = classes.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != classes.len() {
            return Err(Error::Label("duplicate class id in segmentation head".into()));
        }
        let blocks = (1..=layers)
            .map(|l| ResidualBlock {
                conv: LayerParams::init_uniform(CONV_KERNEL * channels, channels, rng),
                mix: LayerParams::init_uniform(channels, channels, rng),
                dilation: 1usize << l,
            })
            .collect();
        Ok(Self {
            in_proj: LayerParams::init_uniform(feature_dim, channels, rng),
            blocks,
            out_proj: LayerParams::init_uniform(channels, classes.len(), rng),
            classes,
            feature_dim,
            channels,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn layers(&self) -> usize {
        self.blocks.len()
    }

    /// Output classes in column order.
    pub fn classes(&self) -> &[ClassId] {
        &self.classes
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Frames the logits at time t can depend on: |t' − t| ≤ Σ dilations.
    pub fn receptive_radius(&self) -> usize {
        self.blocks.iter().map(|b| b.dilation).sum()
    }

    /// Column of a global class id, or a mismatch error.
    pub fn class_column(&self, class: ClassId) -> Result<usize> {
        self.classes
            .iter()
            .position(|&c| c == class)
            .ok_or_else(|| Error::Label(format!("class {class} not in the model head")))
    }

    /// T×A logits for a T×D input.
    pub fn forward(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        Ok(self.forward_cached(x)?.logits)
    }

    fn forward_cached(&self, x: &Matrix<T>) -> Result<Trace<T>> {
        if x.cols() != self.feature_dim {
            return Err(Error::shape(
                "seg forward",
                format!("Tx{}", self.feature_dim),
                format!("{}x{}", x.rows(), x.cols()),
            ));
        }
        let proj = linear_forward(&self.in_proj, x)?;
        let mut blocks = Vec::with_capacity(self.blocks.len());
        let mut current = proj.clone();
        for block in &self.blocks {
            let conv_pre = dilated_conv1d_forward(&block.conv, &current, block.dilation)?;
            let conv_act = relu_rows(&conv_pre);
            let mixed = linear_forward(&block.mix, &conv_act)?;
            let mut out = current.clone();
            out.add_assign(&mixed);
            blocks.push(BlockTrace { input: current, conv_pre, conv_act });
            current = out;
        }
        let logits = linear_forward(&self.out_proj, &current)?;
        Ok(Trace { input: x.clone(), blocks, trunk_out: current, logits })
    }

    /// Appends freshly initialized head columns for unseen classes; existing
    /// columns (weights and bias) are preserved bit-exactly.
    pub fn expand_head(&mut self, new_classes: &[ClassId], rng: &mut RandomSource) -> Result<usize> {
        let mut added = Vec::new();
        for &c in new_classes {
            if self.classes.contains(&c) || added.contains(&c) {
                continue;
            }
            added.push(c);
        }
        if added.is_empty() {
            return Ok(0);
        }
        let old_a = self.classes.len();
        let new_a = old_a + added.len();
        let limit = T::one() / T::cast(self.channels as f64).sqrt();
        let mut weights = Matrix::zeros(self.channels, new_a);
        for r in 0..self.channels {
            for c in 0..old_a {
                weights.set(r, c, self.out_proj.weights.get(r, c));
            }
            for c in old_a..new_a {
                weights.set(r, c, rng.uniform_in(-limit, limit));
            }
        }
        let mut bias = vec![T::zero(); new_a];
        bias[..old_a].copy_from_slice(&self.out_proj.bias);
        self.out_proj = LayerParams {
            grad_weights: Matrix::zeros(self.channels, new_a),
            grad_bias: vec![T::zero(); new_a],
            weights,
            bias,
        };
        self.classes.extend_from_slice(&added);
        Ok(added.len())
    }

    /// Maps global labels to head columns; errors on ids the head lacks.
    pub fn columns_for(&self, labels: &[ClassId]) -> Result<Vec<usize>> {
        labels.iter().map(|&c| self.class_column(c)).collect()
    }

    /// Full training loss with gradient accumulation (forward + backward).
    ///
    /// With `frozen_prev = Some(lp0)` the smoothing term compares each frame
    /// against the *given* previous-frame log-probabilities instead of the
    /// model's own, in value and gradient alike. Evaluated at the parameters
    /// that produced `lp0`, the value and gradient coincide with the training
    /// path, which makes the detached smoothing term finite-difference
    /// checkable.
    pub fn loss_and_grad(
        &mut self,
        x: &Matrix<T>,
        y: &[ClassId],
        cfg: &TasLossConfig,
        frozen_prev: Option<&Matrix<T>>,
    ) -> Result<T> {
        cfg.validate()?;
        let trace = self.forward_cached(x)?;
        let frames = trace.logits.rows();
        if y.len() != frames {
            return Err(Error::Consistency(format!(
                "{} labels for {frames} frames",
                y.len()
            )));
        }
        let cols = self.columns_for(y)?;
        let lp = log_softmax_rows(&trace.logits);
        let num_classes = self.num_classes();

        // Cross-entropy value and its gradient w.r.t. log-probabilities.
        let inv_t = T::one() / T::cast(frames as f64);
        let mut cls = T::zero();
        let mut g_lp = Matrix::zeros(frames, num_classes);
        for (t, &col) in cols.iter().enumerate() {
            cls -= lp.get(t, col) * inv_t;
            g_lp.set(t, col, -inv_t);
        }

        // Truncated smoothing term; gradient only flows into the current frame.
        let prev = frozen_prev.unwrap_or(&lp);
        if prev.rows() != frames || prev.cols() != num_classes {
            return Err(Error::shape(
                "loss_and_grad",
                format!("{frames}x{num_classes} frozen log-probs"),
                format!("{}x{}", prev.rows(), prev.cols()),
            ));
        }
        let tau = T::cast(cfg.tau);
        let lambda = T::cast(cfg.lambda);
        let mut sm = T::zero();
        if frames >= 2 {
            let norm = T::one() / T::cast((frames * num_classes) as f64);
            for t in 1..frames {
                for a in 0..num_classes {
                    let diff = lp.get(t, a) - prev.get(t - 1, a);
                    let delta = diff.abs();
                    let clamped = delta.min(tau);
                    sm += clamped * clamped * norm;
                    if delta < tau {
                        let sign = if diff >= T::zero() { T::one() } else { -T::one() };
                        let g = g_lp.get(t, a)
                            + lambda * T::cast(2.0) * clamped * sign * norm;
                        g_lp.set(t, a, g);
                    }
                }
            }
        }

        let g_logits = log_softmax_backward(&lp, &g_lp);
        self.backward(&trace, &g_logits)?;
        Ok(cls + lambda * sm)
    }

    fn backward(&mut self, trace: &Trace<T>, g_logits: &Matrix<T>) -> Result<()> {
        let mut g = linear_backward(&mut self.out_proj, &trace.trunk_out, g_logits)?;
        for (block, bt) in self.blocks.iter_mut().zip(&trace.blocks).rev() {
            let g_mixed = linear_backward(&mut block.mix, &bt.conv_act, &g)?;
            let g_conv_pre = relu_backward(&bt.conv_pre, &g_mixed);
            let g_path = dilated_conv1d_backward(&mut block.conv, &bt.input, &g_conv_pre, block.dilation)?;
            // Residual: the skip connection passes g through unchanged.
            g.add_assign(&g_path);
        }
        let _ = linear_backward(&mut self.in_proj, &trace.input, &g)?;
        Ok(())
    }
}

struct BlockTrace<T> {
    input: Matrix<T>,
    conv_pre: Matrix<T>,
    conv_act: Matrix<T>,
}

struct Trace<T> {
    input: Matrix<T>,
    blocks: Vec<BlockTrace<T>>,
    trunk_out: Matrix<T>,
    logits: Matrix<T>,
}

impl<T: Scalar> Parameterized<T> for SegModel<T> {
    fn params(&self) -> Vec<(String, &LayerParams<T>)> {
        let mut v: Vec<(String, &LayerParams<T>)> = vec![("in_proj".to_string(), &self.in_proj)];
        for (i, b) in self.blocks.iter().enumerate() {
            v.push((format!("block{}.conv", i + 1), &b.conv));
            v.push((format!("block{}.mix", i + 1), &b.mix));
        }
        v.push(("out_proj".to_string(), &self.out_proj));
        v
    }

    fn params_mut(&mut self) -> Vec<(String, &mut LayerParams<T>)> {
        let mut v: Vec<(String, &mut LayerParams<T>)> =
            vec![("in_proj".to_string(), &mut self.in_proj)];
        for (i, b) in self.blocks.iter_mut().enumerate() {
            v.push((format!("block{}.conv", i + 1), &mut b.conv));
            v.push((format!("block{}.mix", i + 1), &mut b.mix));
        }
        v.push(("out_proj".to_string(), &mut self.out_proj));
        v
    }
}

/// Frame-wise cross-entropy against head-column labels: `(1/T) Σ −log p^t(y^t)`.
pub fn loss_cls<T: Scalar>(logits: &Matrix<T>, cols: &[usize]) -> Result<T> {
    if cols.len() != logits.rows() {
        return Err(Error::Consistency(format!(
            "{} labels for {} frames",
            cols.len(),
            logits.rows()
        )));
    }
    let lp = log_softmax_rows(logits);
    let mut total = T::zero();
    for (t, &col) in cols.iter().enumerate() {
        if col >= logits.cols() {
            return Err(Error::Label(format!(
                "label column {col} >= {} classes",
                logits.cols()
            )));
        }
        total -= lp.get(t, col);
    }
    Ok(total / T::cast(logits.rows() as f64))
}

/// Truncated smoothing loss over adjacent-frame log-probabilities:
/// `(1/(T·A)) Σ_{t≥2,a} min(|Δ|, τ)²`. Returns 0 for single-frame inputs.
pub fn loss_sm<T: Scalar>(logits: &Matrix<T>, tau: f64) -> T {
    let lp = log_softmax_rows(logits);
    smoothing_from_logprobs(&lp, None, tau)
}

/// Smoothing value with an explicitly frozen previous-frame matrix (used by
/// the gradient checker; rows 0..T−2 of `prev` serve as the previous frames).
pub fn loss_sm_frozen<T: Scalar>(logits: &Matrix<T>, prev: &Matrix<T>, tau: f64) -> T {
    let lp = log_softmax_rows(logits);
    smoothing_from_logprobs(&lp, Some(prev), tau)
}

fn smoothing_from_logprobs<T: Scalar>(lp: &Matrix<T>, prev: Option<&Matrix<T>>, tau: f64) -> T {
    let frames = lp.rows();
    if frames < 2 {
        return T::zero();
    }
    let prev = prev.unwrap_or(lp);
    let tau = T::cast(tau);
    let norm = T::one() / T::cast((frames * lp.cols()) as f64);
    let mut sm = T::zero();
    for t in 1..frames {
        for a in 0..lp.cols() {
            let delta = (lp.get(t, a) - prev.get(t - 1, a)).abs().min(tau);
            sm += delta * delta * norm;
        }
    }
    sm
}

/// Combined TAS loss value: `loss_cls + λ·loss_sm`.
pub fn loss_tas<T: Scalar>(logits: &Matrix<T>, cols: &[usize], cfg: &TasLossConfig) -> Result<T> {
    cfg.validate()?;
    Ok(loss_cls(logits, cols)? + T::cast(cfg.lambda) * loss_sm(logits, cfg.tau))
}

/// Frame-wise argmax decoding with lowest-class-id tie-break, run-length
/// encoded into segments over the model's global class ids.
pub fn predict<T: Scalar>(model: &SegModel<T>, x: &Matrix<T>) -> Result<SegmentLabeling> {
    let logits = model.forward(x)?;
    let classes = model.classes();
    let mut framewise = Vec::with_capacity(logits.rows());
    for t in 0..logits.rows() {
        let row = logits.row(t);
        let mut best = 0usize;
        for (i, &v) in row.iter().enumerate().skip(1) {
            // Head columns follow insertion order, not id order, so exact ties
            // compare the global class ids.
            if v > row[best] || (v == row[best] && classes[i] < classes[best]) {
                best = i;
            }
        }
        framewise.push(classes[best]);
    }
    SegmentLabeling::from_framewise(framewise)
}

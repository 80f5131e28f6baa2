//! Temporally Coherent Action model: a conditional VAE over frame features.
//!
//! The encoder maps `(x, a, c)` to a latent Gaussian `(μ, σ)`; the decoder
//! maps `(z, a, c)` back to feature space. `a` is the one-hot action label and
//! `c` the coherence variable — the relative temporal progression of the frame
//! within its action segment. Training minimizes mean squared reconstruction
//! error plus β times the KL divergence to the standard normal prior.

use crate::data::{ClassId, TaskDataset};
use crate::error::{Error, Result};
use crate::numeric::{
    linear_backward, linear_forward, relu_backward, relu_rows, LayerParams, Matrix,
    OptimizerState, Parameterized, RandomSource, Scalar,
};

/// Relative temporal progression of a frame within its segment, in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coherence(f64);

impl Coherence {
    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Coherence of the `i`-th frame (1-based) in a segment of length `len`:
/// `(i-1)/(len-1)`, with the single-frame segment pinned to 0.
pub fn coherence(i: usize, len: usize) -> Result<Coherence> {
    if i < 1 || i > len {
        return Err(Error::Data(format!(
            "frame index {i} outside segment of length {len}"
        )));
    }
    if len == 1 {
        return Ok(Coherence(0.0));
    }
    Ok(Coherence((i - 1) as f64 / (len - 1) as f64))
}

/// Coherence values 0..1 for every frame of a segment, in order.
pub fn coherence_grid(len: usize) -> Vec<f64> {
    (1..=len).map(|i| coherence(i, len).expect("index in range").value()).collect()
}

/// Closed-form KL divergence of `N(μ, diag σ²)` from `N(0, I)`:
/// `½ Σ (μ² + σ² − 1 − log σ²)`.
pub fn kl_standard_normal<T: Scalar>(mu: &[T], sigma: &[T]) -> T {
    let half = T::cast(0.5);
    mu.iter()
        .zip(sigma)
        .map(|(&m, &s)| half * (m * m + s * s - T::one() - (s * s).ln()))
        .sum()
}

/// Encoder/decoder parameter sets of the conditional VAE.
#[derive(Debug, Clone)]
pub struct TcaModel<T> {
    enc_hidden: LayerParams<T>,
    enc_stats: LayerParams<T>,
    dec_hidden: LayerParams<T>,
    dec_out: LayerParams<T>,
    latent_dim: usize,
    num_classes: usize,
    feature_dim: usize,
    hidden_dim: usize,
}

impl<T: Scalar> TcaModel<T> {
    pub fn new(
        feature_dim: usize,
        num_classes: usize,
        latent_dim: usize,
        hidden_dim: usize,
        rng: &mut RandomSource,
    ) -> Self {
        let enc_in = feature_dim + num_classes + 1;
        let dec_in = latent_dim + num_classes + 1;
        Self {
            enc_hidden: LayerParams::init_uniform(enc_in, hidden_dim, rng),
            enc_stats: LayerParams::init_uniform(hidden_dim, 2 * latent_dim, rng),
            dec_hidden: LayerParams::init_uniform(dec_in, hidden_dim, rng),
            dec_out: LayerParams::init_uniform(hidden_dim, feature_dim, rng),
            latent_dim,
            num_classes,
            feature_dim,
            hidden_dim,
        }
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    fn check_class(&self, a: ClassId) -> Result<()> {
        if a >= self.num_classes {
            return Err(Error::Label(format!(
                "action {a} outside the model's {} classes",
                self.num_classes
            )));
        }
        Ok(())
    }

    fn cond_row(&self, head: &[T], a: ClassId, c: f64) -> Vec<T> {
        let mut row = Vec::with_capacity(head.len() + self.num_classes + 1);
        row.extend_from_slice(head);
        for k in 0..self.num_classes {
            row.push(if k == a { T::one() } else { T::zero() });
        }
        row.push(T::cast(c));
        row
    }

    /// Posterior sample for one frame; ε is recorded so `z = μ + σ⊙ε` can be
    /// re-derived.
    pub fn encode(
        &self,
        x: &[T],
        a: ClassId,
        c: Coherence,
        rng: &mut RandomSource,
    ) -> Result<LatentSample<T>> {
        self.check_class(a)?;
        if x.len() != self.feature_dim {
            return Err(Error::shape(
                "tca encode",
                format!("{}-dim frame", self.feature_dim),
                format!("{}-dim frame", x.len()),
            ));
        }
        let input = Matrix::from_vec(1, x.len() + self.num_classes + 1, self.cond_row(x, a, c.0))?;
        let h = relu_rows(&linear_forward(&self.enc_hidden, &input)?);
        let stats = linear_forward(&self.enc_stats, &h)?;
        let z_dim = self.latent_dim;
        let mu: Vec<T> = stats.row(0)[..z_dim].to_vec();
        let sigma: Vec<T> = stats.row(0)[z_dim..].iter().map(|&lv| (T::cast(0.5) * lv).exp()).collect();
        let eps: Vec<T> = (0..z_dim).map(|_| rng.normal()).collect();
        let z: Vec<T> = mu
            .iter()
            .zip(&sigma)
            .zip(&eps)
            .map(|((&m, &s), &e)| m + s * e)
            .collect();
        Ok(LatentSample { mu, sigma, z, eps })
    }

    /// Deterministic reconstruction of one frame from `(z, a, c)`.
    pub fn decode(&self, z: &[T], a: ClassId, c: Coherence) -> Result<Vec<T>> {
        self.check_class(a)?;
        if z.len() != self.latent_dim {
            return Err(Error::shape(
                "tca decode",
                format!("{}-dim latent", self.latent_dim),
                format!("{}-dim latent", z.len()),
            ));
        }
        let input = Matrix::from_vec(1, z.len() + self.num_classes + 1, self.cond_row(z, a, c.0))?;
        let h = relu_rows(&linear_forward(&self.dec_hidden, &input)?);
        let out = linear_forward(&self.dec_out, &h)?;
        Ok(out.row(0).to_vec())
    }
}

impl<T: Scalar> Parameterized<T> for TcaModel<T> {
    fn params(&self) -> Vec<(String, &LayerParams<T>)> {
        vec![
            ("enc_hidden".to_string(), &self.enc_hidden),
            ("enc_stats".to_string(), &self.enc_stats),
            ("dec_hidden".to_string(), &self.dec_hidden),
            ("dec_out".to_string(), &self.dec_out),
        ]
    }

    fn params_mut(&mut self) -> Vec<(String, &mut LayerParams<T>)> {
        vec![
            ("enc_hidden".to_string(), &mut self.enc_hidden),
            ("enc_stats".to_string(), &mut self.enc_stats),
            ("dec_hidden".to_string(), &mut self.dec_hidden),
            ("dec_out".to_string(), &mut self.dec_out),
        ]
    }
}

/// A reparametrized posterior draw.
#[derive(Debug, Clone)]
pub struct LatentSample<T> {
    pub mu: Vec<T>,
    pub sigma: Vec<T>,
    pub z: Vec<T>,
    pub eps: Vec<T>,
}

/// A batch of `(frame, action, coherence)` training triples.
#[derive(Debug, Clone)]
pub struct TcaBatch<T> {
    pub frames: Matrix<T>,
    pub actions: Vec<ClassId>,
    pub coherence: Vec<f64>,
}

impl<T: Scalar> TcaBatch<T> {
    /// Collects every frame of a video as a triple, coherence computed per
    /// segment.
    pub fn from_video(features: &Matrix<T>, labels: &crate::data::SegmentLabeling) -> Self {
        let mut actions = Vec::with_capacity(features.rows());
        let mut cvals = Vec::with_capacity(features.rows());
        for seg in labels.segments() {
            let grid = coherence_grid(seg.len);
            for c in grid {
                actions.push(seg.action);
                cvals.push(c);
            }
        }
        TcaBatch { frames: features.clone(), actions, coherence: cvals }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Loss terms of one batch: `total = recon + β·reg`.
#[derive(Debug, Clone, Copy)]
pub struct TcaLoss<T> {
    pub total: T,
    pub recon: T,
    pub reg: T,
}

/// Forward + backward over a batch with the given noise matrix (one ε row per
/// frame). Gradients are accumulated into the model; callers zero them first.
pub fn loss_tca_with_eps<T: Scalar>(
    m: &mut TcaModel<T>,
    batch: &TcaBatch<T>,
    eps: &Matrix<T>,
    beta: f64,
) -> Result<TcaLoss<T>> {
    if batch.is_empty() {
        return Err(Error::Data("tca loss over an empty batch".into()));
    }
    let b = batch.len();
    let z_dim = m.latent_dim;
    if batch.frames.rows() != b || batch.frames.cols() != m.feature_dim {
        return Err(Error::shape(
            "loss_tca",
            format!("{b}x{} frames", m.feature_dim),
            format!("{}x{}", batch.frames.rows(), batch.frames.cols()),
        ));
    }
    if eps.rows() != b || eps.cols() != z_dim {
        return Err(Error::shape(
            "loss_tca",
            format!("{b}x{z_dim} noise"),
            format!("{}x{}", eps.rows(), eps.cols()),
        ));
    }
    for &a in &batch.actions {
        m.check_class(a)?;
    }

    let beta = T::cast(beta);
    let half = T::cast(0.5);

    // Encoder forward.
    let mut enc_in = Matrix::zeros(b, m.feature_dim + m.num_classes + 1);
    for r in 0..b {
        let row = m.cond_row(batch.frames.row(r), batch.actions[r], batch.coherence[r]);
        enc_in.row_mut(r).copy_from_slice(&row);
    }
    let h_enc_pre = linear_forward(&m.enc_hidden, &enc_in)?;
    let h_enc = relu_rows(&h_enc_pre);
    let stats = linear_forward(&m.enc_stats, &h_enc)?;

    let mut mu = Matrix::zeros(b, z_dim);
    let mut sigma = Matrix::zeros(b, z_dim);
    for r in 0..b {
        for j in 0..z_dim {
            mu.set(r, j, stats.get(r, j));
            sigma.set(r, j, (half * stats.get(r, z_dim + j)).exp());
        }
    }

    // Reparametrize and decode.
    let mut dec_in = Matrix::zeros(b, z_dim + m.num_classes + 1);
    for r in 0..b {
        let z: Vec<T> = (0..z_dim)
            .map(|j| mu.get(r, j) + sigma.get(r, j) * eps.get(r, j))
            .collect();
        let row = m.cond_row(&z, batch.actions[r], batch.coherence[r]);
        dec_in.row_mut(r).copy_from_slice(&row);
    }
    let h_dec_pre = linear_forward(&m.dec_hidden, &dec_in)?;
    let h_dec = relu_rows(&h_dec_pre);
    let xhat = linear_forward(&m.dec_out, &h_dec)?;

    // Losses.
    let n_recon = T::cast((b * m.feature_dim) as f64);
    let recon = xhat.sq_distance(&batch.frames) / n_recon;
    let mut reg = T::zero();
    for r in 0..b {
        reg += kl_standard_normal(mu.row(r), sigma.row(r));
    }
    reg /= T::cast(b as f64);
    let total = recon + beta * reg;

    // Backward: reconstruction path.
    let mut g_xhat = Matrix::zeros(b, m.feature_dim);
    for i in 0..g_xhat.data().len() {
        g_xhat.data_mut()[i] =
            T::cast(2.0) * (xhat.data()[i] - batch.frames.data()[i]) / n_recon;
    }
    let g_h_dec = linear_backward(&mut m.dec_out, &h_dec, &g_xhat)?;
    let g_h_dec_pre = relu_backward(&h_dec_pre, &g_h_dec);
    let g_dec_in = linear_backward(&mut m.dec_hidden, &dec_in, &g_h_dec_pre)?;

    // Through the reparametrization into (μ, log σ²), plus the KL terms.
    let inv_b = T::one() / T::cast(b as f64);
    let mut g_stats = Matrix::zeros(b, 2 * z_dim);
    for r in 0..b {
        for j in 0..z_dim {
            let gz = g_dec_in.get(r, j);
            let s = sigma.get(r, j);
            let g_mu = gz + beta * inv_b * mu.get(r, j);
            // d z / d logvar = ½ σ ε;  d KL / d logvar = ½ (σ² − 1).
            let g_logvar =
                gz * half * s * eps.get(r, j) + beta * inv_b * half * (s * s - T::one());
            g_stats.set(r, j, g_mu);
            g_stats.set(r, z_dim + j, g_logvar);
        }
    }
    let g_h_enc = linear_backward(&mut m.enc_stats, &h_enc, &g_stats)?;
    let g_h_enc_pre = relu_backward(&h_enc_pre, &g_h_enc);
    let _ = linear_backward(&mut m.enc_hidden, &enc_in, &g_h_enc_pre)?;

    Ok(TcaLoss { total, recon, reg })
}

/// Draws fresh ε and evaluates the batch loss, accumulating gradients.
pub fn loss_tca<T: Scalar>(
    m: &mut TcaModel<T>,
    batch: &TcaBatch<T>,
    rng: &mut RandomSource,
    beta: f64,
) -> Result<TcaLoss<T>> {
    let mut eps = Matrix::zeros(batch.len(), m.latent_dim());
    for v in eps.data_mut() {
        *v = rng.normal();
    }
    loss_tca_with_eps(m, batch, &eps, beta)
}

/// Per-epoch mean losses of a training run.
#[derive(Debug, Clone)]
pub struct TcaTrainStats {
    pub epoch_mean_loss: Vec<f64>,
}

/// Trains the model on all `(frame, action, coherence)` triples of a seeded
/// fraction of the task's training items; one optimizer step per video.
pub fn train_tca<T: Scalar>(
    m: &mut TcaModel<T>,
    task: &TaskDataset<T>,
    ratio: f64,
    epochs: usize,
    lr: f64,
    beta: f64,
    rng: &mut RandomSource,
) -> Result<TcaTrainStats> {
    if !(0.0..=1.0).contains(&ratio) || ratio <= 0.0 {
        return Err(Error::Config(format!("tca ratio must be in (0, 1], got {ratio}")));
    }
    let n = task.train.len();
    if n == 0 {
        return Err(Error::Data(format!("task {} has no training items", task.task)));
    }
    let selected = ((ratio * n as f64).ceil() as usize).clamp(1, n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut select_rng = rng.substream("select");
    select_rng.shuffle(&mut order);
    order.truncate(selected);
    order.sort_unstable();

    let batches: Vec<TcaBatch<T>> = order
        .iter()
        .map(|&i| {
            let item = &task.train[i];
            TcaBatch::from_video(item.features.values(), &item.labels)
        })
        .collect();

    let mut opt = OptimizerState::new(T::cast(lr));
    let mut train_rng = rng.substream("epochs");
    let mut stats = TcaTrainStats { epoch_mean_loss: Vec::with_capacity(epochs) };
    for _ in 0..epochs {
        let mut idx: Vec<usize> = (0..batches.len()).collect();
        train_rng.shuffle(&mut idx);
        let mut sum = 0.0;
        for &i in &idx {
            m.zero_grad();
            let loss = loss_tca(m, &batches[i], &mut train_rng, beta)?;
            let value = loss.total.to_f64().unwrap();
            if !value.is_finite() {
                return Err(Error::Numeric(format!("tca loss diverged to {value}")));
            }
            sum += value;
            opt.step(&mut m.params_mut());
        }
        stats.epoch_mean_loss.push(sum / batches.len() as f64);
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{gradcheck, GradCheckConfig};

    #[test]
    fn coherence_endpoints_and_midpoint() {
        assert_eq!(coherence(1, 5).unwrap().value(), 0.0);
        assert_eq!(coherence(5, 5).unwrap().value(), 1.0);
        assert_eq!(coherence(3, 5).unwrap().value(), 0.5);
        assert_eq!(coherence(1, 1).unwrap().value(), 0.0);
        assert!(coherence(0, 5).is_err());
        assert!(coherence(6, 5).is_err());
    }

    #[test]
    fn coherence_grid_is_arithmetic_progression() {
        let grid = coherence_grid(6);
        assert_eq!(grid[0], 0.0);
        assert_eq!(*grid.last().unwrap(), 1.0);
        for w in grid.windows(2) {
            assert!((w[1] - w[0] - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_initialized_encoder_gives_standard_posterior() {
        let mut rng = RandomSource::new(1);
        let mut m = TcaModel::<f64>::new(3, 2, 4, 8, &mut rng);
        for (_, p) in m.params_mut() {
            p.weights.fill(0.0);
            p.bias.fill(0.0);
        }
        let mut draw = RandomSource::new(2);
        let s = m.encode(&[0.5, -0.5, 1.0], 0, coherence(1, 3).unwrap(), &mut draw).unwrap();
        assert!(s.mu.iter().all(|&v| v == 0.0));
        assert!(s.sigma.iter().all(|&v| v == 1.0));
        assert_eq!(s.z, s.eps);

        let out = m.decode(&s.z, 0, coherence(1, 3).unwrap()).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn encode_is_deterministic_per_seed_and_sigma_positive() {
        let mut rng = RandomSource::new(3);
        let m = TcaModel::<f64>::new(4, 3, 5, 16, &mut rng);
        let x = [0.1, -2.0, 3.0, 0.7];
        let c = coherence(2, 4).unwrap();
        let a = m.encode(&x, 1, c, &mut RandomSource::new(9)).unwrap();
        let b = m.encode(&x, 1, c, &mut RandomSource::new(9)).unwrap();
        assert_eq!(a.z, b.z);
        assert!(a.sigma.iter().all(|&s| s > 0.0));
    }

    #[test]
    fn kl_identities() {
        // Standard posterior: zero divergence.
        let mu = vec![0.0; 8];
        let sigma = vec![1.0; 8];
        assert_eq!(kl_standard_normal(&mu, &sigma), 0.0);
        // μ = 1 everywhere, σ = 1, Z = 256 → ½·256 = 128.
        let mu = vec![1.0; 256];
        let sigma = vec![1.0; 256];
        assert_eq!(kl_standard_normal(&mu, &sigma), 128.0);
    }

    #[test]
    fn kl_matches_monte_carlo() {
        let mut rng = RandomSource::new(17);
        for _ in 0..5 {
            let z = 4;
            let mu: Vec<f64> = (0..z).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
            let sigma: Vec<f64> = (0..z).map(|_| rng.uniform_in(0.3, 2.0)).collect();
            let closed = kl_standard_normal(&mu, &sigma);
            let n = 100_000;
            let mut acc = 0.0;
            for _ in 0..n {
                // z ~ q, log q(z) - log p(z)
                let mut lq = 0.0;
                let mut lp = 0.0;
                for j in 0..z {
                    let e: f64 = rng.normal();
                    let zj = mu[j] + sigma[j] * e;
                    lq += -0.5 * e * e - sigma[j].ln();
                    lp += -0.5 * zj * zj;
                }
                acc += lq - lp;
            }
            let mc = acc / n as f64;
            assert!(
                (mc - closed).abs() <= 0.02 * closed.abs().max(0.05),
                "closed {closed} vs mc {mc}"
            );
        }
    }

    fn toy_batch(m: &TcaModel<f64>, b: usize, rng: &mut RandomSource) -> TcaBatch<f64> {
        let mut frames = Matrix::zeros(b, m.feature_dim());
        for v in frames.data_mut() {
            *v = rng.uniform_in(-1.0, 1.0);
        }
        let actions: Vec<ClassId> = (0..b).map(|_| rng.below(m.num_classes())).collect();
        let coherence: Vec<f64> = (0..b).map(|_| rng.uniform()).collect();
        TcaBatch { frames, actions, coherence }
    }

    #[test]
    fn perfect_reconstruction_gives_zero_recon() {
        let mut rng = RandomSource::new(4);
        let mut m = TcaModel::<f64>::new(3, 2, 2, 4, &mut rng);
        for (_, p) in m.params_mut() {
            p.weights.fill(0.0);
            p.bias.fill(0.0);
        }
        // Input frames all zero: decoder outputs zero, recon = 0, reg = 0.
        let batch = TcaBatch {
            frames: Matrix::zeros(5, 3),
            actions: vec![0; 5],
            coherence: vec![0.5; 5],
        };
        let eps = Matrix::zeros(5, 2);
        let loss = loss_tca_with_eps(&mut m, &batch, &eps, 1.0).unwrap();
        assert_eq!(loss.recon, 0.0);
        assert_eq!(loss.reg, 0.0);
        assert_eq!(loss.total, 0.0);
    }

    #[test]
    fn full_loss_gradcheck_passes() {
        let mut rng = RandomSource::new(5);
        let mut m = TcaModel::<f64>::new(6, 3, 4, 10, &mut rng);
        let batch = toy_batch(&m, 8, &mut rng);
        let mut eps = Matrix::zeros(8, 4);
        for v in eps.data_mut() {
            *v = rng.normal();
        }
        let report = gradcheck(
            &mut m,
            |model| {
                model.zero_grad();
                loss_tca_with_eps(model, &batch, &eps, 1.0).unwrap().total
            },
            &GradCheckConfig::default(),
        )
        .unwrap();
        assert!(report.passed(), "{}", report.summary());
    }

    #[test]
    fn training_reduces_loss_on_synthetic_drift_data() {
        use crate::data::{make_synthetic_corpus, SyntheticSpec};
        let spec = SyntheticSpec {
            tasks: 1,
            actions_per_task: 3,
            shared_actions: 0,
            videos_per_task: 6,
            feature_dim: 6,
            segments_per_video: (3, 4),
            segment_len: (5, 12),
            noise_sigma: 0.0,
            drift_scale: 1.0,
            base_scale: 2.0,
        };
        let corpus = make_synthetic_corpus::<f64>(&spec, &mut RandomSource::new(6)).unwrap();
        let task = &corpus.datasets[0];
        let mut init_rng = RandomSource::new(7);
        let mut m = TcaModel::<f64>::new(6, corpus.space.num_classes(), 4, 24, &mut init_rng);

        let eval_recon = |m: &mut TcaModel<f64>| -> f64 {
            let mut total = 0.0;
            for item in &task.train {
                let batch = TcaBatch::from_video(item.features.values(), &item.labels);
                let eps = Matrix::zeros(batch.len(), m.latent_dim());
                m.zero_grad();
                total += loss_tca_with_eps(m, &batch, &eps, 1.0).unwrap().recon;
            }
            total / task.train.len() as f64
        };

        let before = eval_recon(&mut m);
        let stats =
            train_tca(&mut m, task, 1.0, 120, 1e-3, 1.0, &mut RandomSource::new(8)).unwrap();
        let after = eval_recon(&mut m);
        assert!(
            stats.epoch_mean_loss.last().unwrap() < stats.epoch_mean_loss.first().unwrap(),
            "loss should decrease on average"
        );
        assert!(after * 10.0 < before, "recon {before} -> {after}");
    }

    #[test]
    fn ratio_selects_ceil_deterministically() {
        use crate::data::{make_synthetic_corpus, SyntheticSpec};
        let spec = SyntheticSpec {
            tasks: 1,
            actions_per_task: 2,
            shared_actions: 0,
            videos_per_task: 10,
            feature_dim: 3,
            segments_per_video: (2, 2),
            segment_len: (2, 3),
            noise_sigma: 0.1,
            drift_scale: 0.5,
            base_scale: 1.0,
        };
        let corpus = make_synthetic_corpus::<f64>(&spec, &mut RandomSource::new(9)).unwrap();
        let task = &corpus.datasets[0];
        // 8 training items; ratio 0.25 -> ceil(2.0) = 2 items; two identical
        // seeded runs produce identical parameters.
        let mut m1 = TcaModel::<f64>::new(3, 2, 2, 4, &mut RandomSource::new(10));
        let mut m2 = m1.clone();
        train_tca(&mut m1, task, 0.25, 5, 1e-3, 1.0, &mut RandomSource::new(11)).unwrap();
        train_tca(&mut m2, task, 0.25, 5, 1e-3, 1.0, &mut RandomSource::new(11)).unwrap();
        for ((_, a), (_, b)) in m1.params().iter().zip(m2.params().iter()) {
            assert_eq!(a.weights, b.weights);
            assert_eq!(a.bias, b.bias);
        }
        assert!(train_tca(&mut m1, task, 0.0, 1, 1e-3, 1.0, &mut RandomSource::new(1)).is_err());
    }
}

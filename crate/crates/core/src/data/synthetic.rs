//! Deterministic synthetic procedural-video corpora.
//!
//! Every action gets a base vector μ and a drift vector d drawn once; frame i
//! of a segment of length ℓ is `μ + c_i·d + σ·ε` with the coherence variable
//! c_i from the linear-progression rule. Ground truth is therefore temporally
//! coherent by construction, and the bases are returned so tests can compare
//! generated features against them.

use super::labels::{LabelMode, LabelSpace, SegmentLabeling};
use super::{FeatureSequence, TaskDataset, VideoItem};
use crate::error::{Error, Result};
use crate::numeric::{Matrix, RandomSource, Scalar};
use crate::tca::coherence_grid;
use std::collections::BTreeMap;

/// Shape of a synthetic corpus.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub tasks: usize,
    pub actions_per_task: usize,
    /// How many of each task's actions come from a pool shared by all tasks.
    pub shared_actions: usize,
    /// Total videos per task; split 80/20 into train/test.
    pub videos_per_task: usize,
    pub feature_dim: usize,
    /// Inclusive range of segments per video.
    pub segments_per_video: (usize, usize),
    /// Inclusive range of segment lengths in frames.
    pub segment_len: (usize, usize),
    /// Per-frame isotropic noise scale σ.
    pub noise_sigma: f64,
    /// Drift magnitude |d| (exact; drift directions are unit vectors).
    pub drift_scale: f64,
    /// Base vectors are drawn from N(0, base_scale² I).
    pub base_scale: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            tasks: 3,
            actions_per_task: 4,
            shared_actions: 0,
            videos_per_task: 25,
            feature_dim: 16,
            segments_per_video: (4, 8),
            segment_len: (10, 30),
            noise_sigma: 0.3,
            drift_scale: 2.0,
            base_scale: 5.0,
        }
    }
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("tasks", self.tasks),
            ("actions_per_task", self.actions_per_task),
            ("videos_per_task", self.videos_per_task),
            ("feature_dim", self.feature_dim),
            ("segments_per_video min", self.segments_per_video.0),
            ("segment_len min", self.segment_len.0),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("synthetic spec: {name} must be >= 1")));
            }
        }
        if self.segments_per_video.0 > self.segments_per_video.1 {
            return Err(Error::Config("synthetic spec: segments range inverted".into()));
        }
        if self.segment_len.0 > self.segment_len.1 {
            return Err(Error::Config("synthetic spec: segment length range inverted".into()));
        }
        if self.shared_actions > self.actions_per_task {
            return Err(Error::Config(
                "synthetic spec: shared_actions exceeds actions_per_task".into(),
            ));
        }
        if self.actions_per_task < 2 {
            return Err(Error::Config(
                "synthetic spec: need >= 2 actions per task for distinct adjacent segments".into(),
            ));
        }
        if self.noise_sigma < 0.0 || self.drift_scale < 0.0 || self.base_scale < 0.0 {
            return Err(Error::Config("synthetic spec: scales must be >= 0".into()));
        }
        Ok(())
    }

    /// Action names of one task: shared names first, then task-local ones.
    pub fn task_names(&self, task: usize) -> Vec<String> {
        (0..self.actions_per_task)
            .map(|j| {
                if j < self.shared_actions {
                    format!("shared_a{j}")
                } else {
                    format!("t{task}_a{j}")
                }
            })
            .collect()
    }
}

/// Ground-truth generator parameters of one action.
#[derive(Debug, Clone)]
pub struct ActionBasis<T> {
    pub mean: Vec<T>,
    pub drift: Vec<T>,
}

/// A generated corpus: datasets labeled under the disjoint space, plus the
/// generator ground truth keyed by action name.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus<T> {
    pub datasets: Vec<TaskDataset<T>>,
    pub space: LabelSpace,
    pub per_task_names: Vec<Vec<String>>,
    pub bases: BTreeMap<String, ActionBasis<T>>,
}

/// Generates a corpus; two calls with equal spec and rng seed are bit-identical.
pub fn make_synthetic_corpus<T: Scalar>(
    spec: &SyntheticSpec,
    rng: &mut RandomSource,
) -> Result<SyntheticCorpus<T>> {
    spec.validate()?;
    let per_task_names: Vec<Vec<String>> = (0..spec.tasks).map(|b| spec.task_names(b)).collect();
    let space = LabelSpace::build(LabelMode::Disjoint, &per_task_names)?;

    // Bases are drawn once per distinct name, in first-appearance order.
    let mut bases: BTreeMap<String, ActionBasis<T>> = BTreeMap::new();
    let mut base_rng = rng.substream("bases");
    for names in &per_task_names {
        for name in names {
            if bases.contains_key(name) {
                continue;
            }
            let mean: Vec<T> = (0..spec.feature_dim)
                .map(|_| base_rng.normal::<T>() * T::cast(spec.base_scale))
                .collect();
            let mut drift: Vec<f64> = (0..spec.feature_dim).map(|_| base_rng.normal()).collect();
            let norm = drift.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            for v in &mut drift {
                *v = *v / norm * spec.drift_scale;
            }
            bases.insert(
                name.clone(),
                ActionBasis { mean, drift: drift.into_iter().map(T::cast).collect() },
            );
        }
    }

    // 80/20 split; a single-video task keeps it for training.
    let n_test = if spec.videos_per_task == 1 { 0 } else { (spec.videos_per_task / 5).max(1) };
    let n_train = spec.videos_per_task - n_test;

    let mut datasets = Vec::with_capacity(spec.tasks);
    for (task, names) in per_task_names.iter().enumerate() {
        let mut task_rng = rng.substream_indexed("task", task as u64);
        let mut items = Vec::with_capacity(spec.videos_per_task);
        for v in 0..spec.videos_per_task {
            let n_segments = task_rng.range_inclusive(spec.segments_per_video.0, spec.segments_per_video.1);
            // Markov walk over the task vocabulary: next action uniform over
            // the others, so adjacent segments always differ.
            let mut runs = Vec::with_capacity(n_segments);
            let mut current = task_rng.below(names.len());
            for _ in 0..n_segments {
                let len = task_rng.range_inclusive(spec.segment_len.0, spec.segment_len.1);
                let class = space.resolve(task, &names[current])?;
                runs.push((class, len));
                if names.len() > 1 {
                    let mut next = task_rng.below(names.len() - 1);
                    if next >= current {
                        next += 1;
                    }
                    current = next;
                }
            }
            let labels = SegmentLabeling::from_runs(&runs)?;

            let total_frames = labels.frames();
            let mut values = Matrix::zeros(total_frames, spec.feature_dim);
            for seg in labels.segments() {
                let name = space.raw_name(seg.action).to_string();
                let basis = &bases[&name];
                let grid = coherence_grid(seg.len);
                for (i, &c) in grid.iter().enumerate() {
                    let row = values.row_mut(seg.start + i);
                    for (dcol, slot) in row.iter_mut().enumerate() {
                        let noise = if spec.noise_sigma > 0.0 {
                            task_rng.normal::<T>() * T::cast(spec.noise_sigma)
                        } else {
                            T::zero()
                        };
                        *slot = basis.mean[dcol] + T::cast(c) * basis.drift[dcol] + noise;
                    }
                }
            }
            let features = FeatureSequence::new(values, format!("t{task}_v{v}"))?;
            items.push(VideoItem { features, labels });
        }
        let test = items.split_off(n_train);
        let classes = space.task_classes(task);
        datasets.push(TaskDataset { task, classes, train: items, test });
    }

    Ok(SyntheticCorpus { datasets, space, per_task_names, bases })
}

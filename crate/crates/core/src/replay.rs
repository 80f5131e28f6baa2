//! Top-down replay synthesis plus the exemplar and original baselines.
//!
//! Each task keeps a symbolic sequence pool (action order and durations of
//! every training video). Replay sampling draws a structure uniformly, a
//! cached decoder fills each segment with features, and the segments are
//! concatenated by their timestamps. Segment features come in three modes:
//! coherent transitions within a segment are the contributed setup; static
//! and random are the ablation variants.

use crate::data::{ClassId, FeatureSequence, SegmentLabeling, TaskDataset, VideoItem};
use crate::error::{Error, Result};
use crate::numeric::{Matrix, RandomSource, Scalar};
use crate::tca::TcaModel;
use std::collections::BTreeMap;

/// Segment-feature generation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenMode {
    /// One latent per segment, coherence swept across frames.
    Coherent,
    /// One latent, constant mid-action coherence: all frames identical.
    Static,
    /// Constant coherence, independent latent per frame.
    Random,
}

impl GenMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            GenMode::Coherent => "coherent",
            GenMode::Static => "static",
            GenMode::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "coherent" => Ok(GenMode::Coherent),
            "static" => Ok(GenMode::Static),
            "random" => Ok(GenMode::Random),
            other => Err(Error::Config(format!("unknown generation mode {other:?}"))),
        }
    }
}

/// Symbolic structures `(action, length)` of every training video of a task.
#[derive(Debug, Clone)]
pub struct SequencePool {
    task: usize,
    structures: Vec<Vec<(ClassId, usize)>>,
}

impl SequencePool {
    pub fn task(&self) -> usize {
        self.task
    }

    pub fn len(&self) -> usize {
        self.structures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.structures.is_empty()
    }

    pub fn structure(&self, i: usize) -> &[(ClassId, usize)] {
        &self.structures[i]
    }

    /// Text form, one line per structure: `a:len a:len ...`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.structures {
            let line: Vec<String> = s.iter().map(|(a, l)| format!("{a}:{l}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(task: usize, content: &str) -> Result<Self> {
        let mut structures = Vec::new();
        for line in content.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut runs = Vec::new();
            for tok in line.split_whitespace() {
                let (a, l) = tok
                    .split_once(':')
                    .ok_or_else(|| Error::Pool(format!("bad pool token {tok:?}")))?;
                runs.push((
                    a.parse().map_err(|_| Error::Pool(format!("bad action in {tok:?}")))?,
                    l.parse().map_err(|_| Error::Pool(format!("bad length in {tok:?}")))?,
                ));
            }
            structures.push(runs);
        }
        Ok(Self { task, structures })
    }
}

/// Stores every training video's structure of a finished task.
pub fn build_pool<T: Scalar>(task: &TaskDataset<T>) -> Result<SequencePool> {
    if task.train.is_empty() {
        return Err(Error::Pool(format!("task {} has no training items", task.task)));
    }
    Ok(SequencePool {
        task: task.task,
        structures: task.train.iter().map(|item| item.labels.runs()).collect(),
    })
}

/// Uniform draw (with replacement) of a structure index.
pub fn sample_structure(pool: &SequencePool, rng: &mut RandomSource) -> Result<usize> {
    if pool.is_empty() {
        return Err(Error::Pool(format!("task {} pool is empty", pool.task)));
    }
    Ok(rng.below(pool.len()))
}

/// Generates an `len × D` feature block for one action segment.
pub fn generate_segment<T: Scalar>(
    decoder: &TcaModel<T>,
    action: ClassId,
    len: usize,
    mode: GenMode,
    rng: &mut RandomSource,
) -> Result<Matrix<T>> {
    if len == 0 {
        return Err(Error::Data("segment length must be >= 1".into()));
    }
    let z_dim = decoder.latent_dim();
    let draw_z = |rng: &mut RandomSource| -> Vec<T> { (0..z_dim).map(|_| rng.normal()).collect() };
    let mut out = Matrix::zeros(len, decoder.feature_dim());
    match mode {
        GenMode::Coherent => {
            let z = draw_z(rng);
            for i in 0..len {
                let frame = decoder.decode(&z, action, crate::tca::coherence(i + 1, len)?)?;
                out.row_mut(i).copy_from_slice(&frame);
            }
        }
        GenMode::Static => {
            let z = draw_z(rng);
            let frame = decoder.decode(&z, action, fixed_coherence())?;
            for i in 0..len {
                out.row_mut(i).copy_from_slice(&frame);
            }
        }
        GenMode::Random => {
            for i in 0..len {
                let z = draw_z(rng);
                let frame = decoder.decode(&z, action, fixed_coherence())?;
                out.row_mut(i).copy_from_slice(&frame);
            }
        }
    }
    Ok(out)
}

/// Mid-action coherence (c = 0.5) used by the static and random modes.
fn fixed_coherence() -> crate::tca::Coherence {
    crate::tca::coherence(2, 3).expect("valid midpoint")
}

/// Where a replay video came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub source_task: usize,
    pub structure_index: usize,
    pub mode: &'static str,
}

/// A synthesized (or inflated/retained) video with labels attached from its
/// sampled structure.
#[derive(Debug, Clone)]
pub struct ReplayVideo<T> {
    pub features: FeatureSequence<T>,
    pub labels: SegmentLabeling,
    pub provenance: Provenance,
}

impl<T: Scalar> ReplayVideo<T> {
    pub fn as_item(&self) -> VideoItem<T> {
        VideoItem { features: self.features.clone(), labels: self.labels.clone() }
    }
}

/// Samples one structure from the pool and decodes it segment by segment.
pub fn generate_video<T: Scalar>(
    decoders: &BTreeMap<usize, TcaModel<T>>,
    pool: &SequencePool,
    mode: GenMode,
    rng: &mut RandomSource,
) -> Result<ReplayVideo<T>> {
    let decoder = decoders.get(&pool.task).ok_or_else(|| {
        Error::Cache(format!("no cached decoder for task {}", pool.task))
    })?;
    let idx = sample_structure(pool, rng)?;
    let structure = pool.structure(idx);
    let labels = SegmentLabeling::from_runs(structure)?;
    let total: usize = structure.iter().map(|&(_, l)| l).sum();
    let mut values = Matrix::zeros(total, decoder.feature_dim());
    let mut offset = 0;
    for &(action, len) in structure {
        let block = generate_segment(decoder, action, len, mode, rng)?;
        for i in 0..len {
            values.row_mut(offset + i).copy_from_slice(block.row(i));
        }
        offset += len;
    }
    let features = FeatureSequence::new(
        values,
        format!("replay_t{}_s{}_{}", pool.task, idx, mode.as_str()),
    )?;
    Ok(ReplayVideo {
        features,
        labels,
        provenance: Provenance { source_task: pool.task, structure_index: idx, mode: mode.as_str() },
    })
}

/// Splits a replay budget over previous tasks: everyone gets `M / n`, the
/// remainder goes to the lowest task ids. Errors when `M < n`.
pub fn budget_split(budget: usize, num_tasks: usize) -> Result<Vec<usize>> {
    if num_tasks == 0 {
        return Err(Error::Budget("no previous tasks to replay".into()));
    }
    if budget < num_tasks {
        return Err(Error::Budget(format!(
            "budget {budget} below one video per each of {num_tasks} previous tasks"
        )));
    }
    let base = budget / num_tasks;
    let rem = budget % num_tasks;
    Ok((0..num_tasks).map(|i| base + usize::from(i < rem)).collect())
}

/// Builds exactly `budget` replay videos across all pooled previous tasks.
///
/// Videos are generated from per-video substreams derived from
/// `(rng seed, task, index)`, so the set is deterministic and order-independent.
pub fn build_replay_set<T: Scalar>(
    decoders: &BTreeMap<usize, TcaModel<T>>,
    pools: &BTreeMap<usize, SequencePool>,
    budget: usize,
    mode: GenMode,
    rng: &RandomSource,
) -> Result<Vec<ReplayVideo<T>>> {
    let quotas = budget_split(budget, pools.len())?;
    let mut out = Vec::with_capacity(budget);
    for ((task, pool), quota) in pools.iter().zip(quotas) {
        for j in 0..quota {
            let mut video_rng = rng.substream_indexed(&format!("video/t{task}"), j as u64);
            out.push(generate_video(decoders, pool, mode, &mut video_rng)?);
        }
    }
    Ok(out)
}

/// Per-sequence, per-segment mean frames of one task.
#[derive(Debug, Clone)]
pub struct ExemplarStore<T> {
    task: usize,
    sequences: Vec<ExemplarSequence<T>>,
}

#[derive(Debug, Clone)]
struct ExemplarSequence<T> {
    runs: Vec<(ClassId, usize)>,
    /// One mean frame per segment, in order.
    means: Vec<Vec<T>>,
}

impl<T: Scalar> ExemplarStore<T> {
    pub fn task(&self) -> usize {
        self.task
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// Mean frame of one stored segment (for tests).
    pub fn mean_frame(&self, sequence: usize, segment: usize) -> &[T] {
        &self.sequences[sequence].means[segment]
    }
}

/// Computes per-segment mean frames for every training video of a task.
pub fn build_exemplar_store<T: Scalar>(task: &TaskDataset<T>) -> Result<ExemplarStore<T>> {
    if task.train.is_empty() {
        return Err(Error::Data(format!("task {} has no training items", task.task)));
    }
    let mut sequences = Vec::with_capacity(task.train.len());
    for item in &task.train {
        let dim = item.features.dim();
        let mut means = Vec::with_capacity(item.labels.segments().len());
        for seg in item.labels.segments() {
            let mut mean = vec![T::zero(); dim];
            for t in seg.start..seg.start + seg.len {
                for (m, &v) in mean.iter_mut().zip(item.features.frame(t)) {
                    *m += v;
                }
            }
            let inv = T::one() / T::cast(seg.len as f64);
            for m in &mut mean {
                *m *= inv;
            }
            means.push(mean);
        }
        sequences.push(ExemplarSequence { runs: item.labels.runs(), means });
    }
    Ok(ExemplarStore { task: task.task, sequences })
}

/// Inflates stored mean frames into exactly `budget` piecewise-constant videos.
pub fn build_exemplar_set<T: Scalar>(
    stores: &BTreeMap<usize, ExemplarStore<T>>,
    budget: usize,
    rng: &RandomSource,
) -> Result<Vec<ReplayVideo<T>>> {
    let quotas = budget_split(budget, stores.len())?;
    let mut out = Vec::with_capacity(budget);
    for ((task, store), quota) in stores.iter().zip(quotas) {
        if store.is_empty() {
            return Err(Error::Data(format!("exemplar store for task {task} is empty")));
        }
        for j in 0..quota {
            let mut video_rng = rng.substream_indexed(&format!("exemplar/t{task}"), j as u64);
            let idx = video_rng.below(store.len());
            let seq = &store.sequences[idx];
            let labels = SegmentLabeling::from_runs(&seq.runs)?;
            let dim = seq.means[0].len();
            let mut values = Matrix::zeros(labels.frames(), dim);
            for (seg, mean) in labels.segments().iter().zip(&seq.means) {
                for t in seg.start..seg.start + seg.len {
                    values.row_mut(t).copy_from_slice(mean);
                }
            }
            out.push(ReplayVideo {
                features: FeatureSequence::new(values, format!("exemplar_t{task}_s{idx}"))?,
                labels,
                provenance: Provenance {
                    source_task: *task,
                    structure_index: idx,
                    mode: "exemplar",
                },
            });
        }
    }
    Ok(out)
}

/// Upper-bound baseline: replays exactly `budget` retained original videos,
/// sampled uniformly with replacement per task under the same budgeting rule.
pub fn original_replay<T: Scalar>(
    retained: &BTreeMap<usize, Vec<VideoItem<T>>>,
    budget: usize,
    rng: &RandomSource,
) -> Result<Vec<ReplayVideo<T>>> {
    let quotas = budget_split(budget, retained.len())?;
    let mut out = Vec::with_capacity(budget);
    for ((task, items), quota) in retained.iter().zip(quotas) {
        if items.is_empty() {
            return Err(Error::Data(format!("no retained items for task {task}")));
        }
        for j in 0..quota {
            let mut video_rng = rng.substream_indexed(&format!("original/t{task}"), j as u64);
            let idx = video_rng.below(items.len());
            let item = &items[idx];
            out.push(ReplayVideo {
                features: item.features.clone(),
                labels: item.labels.clone(),
                provenance: Provenance { source_task: *task, structure_index: idx, mode: "original" },
            });
        }
    }
    Ok(out)
}

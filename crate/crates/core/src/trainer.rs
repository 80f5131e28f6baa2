//! Incremental training loop.
//!
//! Task 1 trains the segmentation model and the first TCA model; every later
//! task first assembles a replay set for all previous tasks from the cached
//! decoders (or the baseline stores), trains the segmentation model on the
//! union of current and replay data, then trains that task's TCA model on the
//! current data only. After every stage the model is evaluated on all seen
//! tasks' test sets.
//!
//! Training data access is routed through an auditing wrapper: under the
//! class-incremental protocol, training items of task b may only be touched
//! during stage b. The `original` upper-bound baseline deliberately violates
//! this, and its accesses are recorded as such.

use crate::data::{ClassId, LabelSpace, SegmentLabeling, TaskDataset, VideoItem};
use crate::error::{Error, Result};
use crate::metrics::{aggregate, evaluate_set, ConfusionMatrix, TaskMetrics};
use crate::numeric::{Matrix, OptimizerState, Parameterized, RandomSource, Scalar};
use crate::replay::{
    build_exemplar_set, build_exemplar_store, build_pool, build_replay_set, original_replay,
    ExemplarStore, GenMode, ReplayVideo, SequencePool,
};
use crate::seg::{predict, SegModel, TasLossConfig};
use crate::tca::{train_tca, TcaModel};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Replay strategy of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// No replay; sequential finetuning.
    Finetune,
    /// Per-segment mean-frame exemplars, inflated statically.
    Exemplar,
    /// Generative replay through cached TCA decoders.
    Tca(GenMode),
    /// Upper bound: replays retained original videos.
    Original,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Finetune => "finetune",
            Strategy::Exemplar => "exemplar",
            Strategy::Tca(_) => "tca",
            Strategy::Original => "original",
        }
    }

    pub fn uses_replay(&self) -> bool {
        !matches!(self, Strategy::Finetune)
    }
}

/// Segmentation model and training hyperparameters.
#[derive(Debug, Clone)]
pub struct SegTrainConfig {
    pub channels: usize,
    pub layers: usize,
    pub epochs: usize,
    pub lr: f64,
    pub loss: TasLossConfig,
}

impl Default for SegTrainConfig {
    fn default() -> Self {
        Self { channels: 64, layers: 8, epochs: 50, lr: 5e-4, loss: TasLossConfig::default() }
    }
}

/// TCA model and training hyperparameters.
#[derive(Debug, Clone)]
pub struct TcaTrainConfig {
    pub latent: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub beta: f64,
    /// Fraction of the task's training items used for TCA training.
    pub ratio: f64,
}

impl Default for TcaTrainConfig {
    fn default() -> Self {
        Self { latent: 16, hidden: 64, epochs: 150, lr: 1e-3, beta: 1.0, ratio: 1.0 }
    }
}

/// Full specification of one incremental run.
#[derive(Debug, Clone)]
pub struct IncrementalRun {
    pub strategy: Strategy,
    /// Visit order: a permutation of dataset indices.
    pub task_order: Vec<usize>,
    pub replay_budget: usize,
    pub seg: SegTrainConfig,
    pub tca: TcaTrainConfig,
    pub seed: u64,
}

/// What kind of dataset access the audit recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessKind {
    Train,
    Test,
}

/// One recorded access: during `stage`, items of the task at order position
/// `position` were read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccessRecord {
    pub stage: usize,
    pub position: usize,
    pub kind: AccessKind,
}

/// Access log of one run; the class-incremental restriction allows training
/// data only at its own stage.
#[derive(Debug, Clone, Default)]
pub struct DataAudit {
    pub records: Vec<AccessRecord>,
}

impl DataAudit {
    fn note(&mut self, stage: usize, position: usize, kind: AccessKind) {
        self.records.push(AccessRecord { stage, position, kind });
    }

    /// Train-data reads outside the owning stage.
    pub fn violations(&self) -> Vec<AccessRecord> {
        self.records
            .iter()
            .copied()
            .filter(|r| r.kind == AccessKind::Train && r.stage != r.position)
            .collect()
    }
}

/// Per-stage evaluation snapshot over all seen tasks.
#[derive(Debug, Clone)]
pub struct StageSnapshot {
    pub stage: usize,
    /// `(order position, metrics)` for every task seen so far, in visit order.
    pub per_task: Vec<(usize, TaskMetrics)>,
    pub aggregate: TaskMetrics,
    pub confusion: ConfusionMatrix,
}

/// Append-only metric history of a run.
#[derive(Debug, Clone, Default)]
pub struct RunHistory {
    pub stages: Vec<StageSnapshot>,
}

impl RunHistory {
    /// Final task-averaged metrics (last stage aggregate).
    pub fn final_aggregate(&self) -> Option<TaskMetrics> {
        self.stages.last().map(|s| s.aggregate)
    }

    /// Long-format delimited table: one row per (stage, seen task) plus an
    /// aggregate row per stage.
    pub fn to_table_string(&self) -> String {
        let mut out = String::from("stage\ttask\tacc\tedit\tf1_10\tf1_25\tf1_50\n");
        for snap in &self.stages {
            for (pos, m) in &snap.per_task {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
                    snap.stage, pos, m.acc, m.edit, m.f1[0], m.f1[1], m.f1[2]
                );
            }
            let a = &snap.aggregate;
            let _ = writeln!(
                out,
                "{}\tavg\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
                snap.stage, a.acc, a.edit, a.f1[0], a.f1[1], a.f1[2]
            );
        }
        out
    }
}

/// Observer invoked after every completed stage; used to persist per-task
/// checkpoints and confusion dumps while the run is still in flight.
pub trait StageSink<T: Scalar> {
    fn on_stage(
        &mut self,
        snapshot: &StageSnapshot,
        model: &SegModel<T>,
        tca: Option<&TcaModel<T>>,
        pool: Option<&SequencePool>,
    ) -> Result<()>;
}

/// Everything a finished run leaves behind.
#[derive(Debug)]
pub struct RunOutcome<T> {
    pub model: SegModel<T>,
    pub history: RunHistory,
    /// TCA decoders cached per order position (tca strategy only).
    pub decoders: BTreeMap<usize, TcaModel<T>>,
    /// Sequence pools per order position (tca strategy only).
    pub pools: BTreeMap<usize, SequencePool>,
    pub audit: DataAudit,
}

/// Per-epoch mean training loss of one stage.
#[derive(Debug, Clone)]
pub struct StageStats {
    pub epoch_mean_loss: Vec<f64>,
}

/// One stage of segmentation training over the shuffled union of real and
/// replay items, one optimizer step per sequence.
pub fn train_stage<T: Scalar>(
    model: &mut SegModel<T>,
    real: &[VideoItem<T>],
    replay: &[ReplayVideo<T>],
    cfg: &SegTrainConfig,
    rng: &mut RandomSource,
) -> Result<StageStats> {
    let items: Vec<(&Matrix<T>, &SegmentLabeling)> = real
        .iter()
        .map(|it| (it.features.values(), &it.labels))
        .chain(replay.iter().map(|rv| (rv.features.values(), &rv.labels)))
        .collect();
    if items.is_empty() {
        return Err(Error::Data("training stage has no items".into()));
    }
    // Replay labels must already be inside the head.
    for (_, labels) in &items {
        for seg in labels.segments() {
            model.class_column(seg.action)?;
        }
    }
    let mut opt = OptimizerState::new(T::cast(cfg.lr));
    let mut stats = StageStats { epoch_mean_loss: Vec::with_capacity(cfg.epochs) };
    for _ in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..items.len()).collect();
        rng.shuffle(&mut order);
        let mut sum = 0.0;
        for &i in &order {
            let (x, labels) = items[i];
            model.zero_grad();
            let loss = model.loss_and_grad(x, labels.framewise(), &cfg.loss, None)?;
            let value = loss.to_f64().unwrap();
            if !value.is_finite() {
                return Err(Error::Numeric(format!("stage loss diverged to {value}")));
            }
            sum += value;
            opt.step(&mut model.params_mut());
        }
        stats.epoch_mean_loss.push(sum / items.len() as f64);
    }
    Ok(stats)
}

/// Evaluates the model on the test sets of all seen tasks.
pub fn snapshot_eval<T: Scalar>(
    model: &SegModel<T>,
    seen: &[(usize, &TaskDataset<T>)],
    num_classes: usize,
) -> Result<(Vec<(usize, TaskMetrics)>, ConfusionMatrix)> {
    let mut per_task = Vec::with_capacity(seen.len());
    let mut confusion = ConfusionMatrix::new(num_classes);
    for (position, ds) in seen {
        let mut pairs = Vec::with_capacity(ds.test.len());
        for item in &ds.test {
            let pred = predict(model, item.features.values())?;
            confusion.accumulate(&pred, &item.labels)?;
            pairs.push((pred, item.labels.clone()));
        }
        per_task.push((*position, evaluate_set(&pairs)?));
    }
    Ok((per_task, confusion))
}

fn sorted_classes(classes: &[ClassId]) -> Vec<ClassId> {
    let mut v = classes.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// Executes the full incremental protocol.
pub fn run<T: Scalar>(
    cfg: &IncrementalRun,
    datasets: &[TaskDataset<T>],
    space: &LabelSpace,
) -> Result<RunOutcome<T>> {
    run_with_sink(cfg, datasets, space, None)
}

/// [`run`] with a per-stage observer.
pub fn run_with_sink<T: Scalar>(
    cfg: &IncrementalRun,
    datasets: &[TaskDataset<T>],
    space: &LabelSpace,
    mut sink: Option<&mut dyn StageSink<T>>,
) -> Result<RunOutcome<T>> {
    if datasets.is_empty() {
        return Err(Error::Data("no tasks to train on".into()));
    }
    let mut order_check = cfg.task_order.clone();
    order_check.sort_unstable();
    if order_check != (0..datasets.len()).collect::<Vec<_>>() {
        return Err(Error::Config(format!(
            "task order {:?} is not a permutation of 0..{}",
            cfg.task_order,
            datasets.len()
        )));
    }
    let feature_dim = datasets[0].train.first().map(|it| it.features.dim()).ok_or_else(|| {
        Error::Data("first task has no training items".into())
    })?;

    let root = RandomSource::new(cfg.seed);
    let num_classes = space.num_classes();
    let stages = datasets.len();

    let mut audit = DataAudit::default();
    let mut model: Option<SegModel<T>> = None;
    let mut decoders: BTreeMap<usize, TcaModel<T>> = BTreeMap::new();
    let mut pools: BTreeMap<usize, SequencePool> = BTreeMap::new();
    let mut exemplars: BTreeMap<usize, ExemplarStore<T>> = BTreeMap::new();
    let mut retained: BTreeMap<usize, Vec<VideoItem<T>>> = BTreeMap::new();
    let mut history = RunHistory::default();

    for stage in 1..=stages {
        let position = stage;
        let ds = &datasets[cfg.task_order[stage - 1]];
        let new_classes = sorted_classes(&ds.classes);

        // Grow (or create) the classification head.
        match model.as_mut() {
            None => {
                let mut init_rng = root.substream("init/seg");
                model = Some(SegModel::new(
                    feature_dim,
                    cfg.seg.channels,
                    cfg.seg.layers,
                    new_classes.clone(),
                    &mut init_rng,
                )?);
            }
            Some(m) => {
                if space.mode() == crate::data::LabelMode::Disjoint {
                    for &c in &new_classes {
                        if m.classes().contains(&c) {
                            return Err(Error::Label(format!(
                                "disjoint run re-encountered class {c} at stage {stage}"
                            )));
                        }
                    }
                }
                let mut head_rng = root.substream(&format!("init/head/stage{stage}"));
                m.expand_head(&new_classes, &mut head_rng)?;
            }
        }
        let m = model.as_mut().expect("model initialized");

        // Replay assembly from caches of stages 1..stage-1.
        let replay: Vec<ReplayVideo<T>> = if stage >= 2 && cfg.strategy.uses_replay() {
            let replay_rng = root.substream(&format!("replay/stage{stage}"));
            match cfg.strategy {
                Strategy::Finetune => Vec::new(),
                Strategy::Tca(mode) => {
                    build_replay_set(&decoders, &pools, cfg.replay_budget, mode, &replay_rng)?
                }
                Strategy::Exemplar => {
                    build_exemplar_set(&exemplars, cfg.replay_budget, &replay_rng)?
                }
                Strategy::Original => {
                    // Replaying stored originals reads past training data.
                    for &p in retained.keys() {
                        audit.note(stage, p, AccessKind::Train);
                    }
                    original_replay(&retained, cfg.replay_budget, &replay_rng)?
                }
            }
        } else {
            Vec::new()
        };

        // Train the segmentation model on current ∪ replay.
        audit.note(stage, position, AccessKind::Train);
        let mut seg_rng = root.substream(&format!("train/seg/stage{stage}"));
        train_stage(m, &ds.train, &replay, &cfg.seg, &mut seg_rng)?;

        // Strategy bookkeeping on the current task's training data.
        match cfg.strategy {
            Strategy::Tca(_) => {
                audit.note(stage, position, AccessKind::Train);
                let mut tca_rng = root.substream(&format!("train/tca/stage{stage}"));
                let mut init_rng = root.substream(&format!("init/tca/stage{stage}"));
                let mut tca = TcaModel::new(
                    feature_dim,
                    num_classes,
                    cfg.tca.latent,
                    cfg.tca.hidden,
                    &mut init_rng,
                );
                train_tca(
                    &mut tca,
                    ds,
                    cfg.tca.ratio,
                    cfg.tca.epochs,
                    cfg.tca.lr,
                    cfg.tca.beta,
                    &mut tca_rng,
                )?;
                decoders.insert(position, tca);
                pools.insert(position, pool_for_position(ds, position)?);
            }
            Strategy::Exemplar => {
                audit.note(stage, position, AccessKind::Train);
                exemplars.insert(position, build_exemplar_store(ds)?);
            }
            Strategy::Original => {
                audit.note(stage, position, AccessKind::Train);
                retained.insert(position, ds.train.clone());
            }
            Strategy::Finetune => {}
        }

        // Evaluate on every seen task's test set.
        let seen: Vec<(usize, &TaskDataset<T>)> = (1..=stage)
            .map(|p| {
                audit.note(stage, p, AccessKind::Test);
                (p, &datasets[cfg.task_order[p - 1]])
            })
            .collect();
        let (per_task, confusion) = snapshot_eval(m, &seen, num_classes)?;
        let agg = aggregate(&per_task.iter().map(|(_, m)| *m).collect::<Vec<_>>());
        let snapshot = StageSnapshot { stage, per_task, aggregate: agg, confusion };
        if let Some(sink) = sink.as_deref_mut() {
            sink.on_stage(&snapshot, m, decoders.get(&position), pools.get(&position))?;
        }
        history.stages.push(snapshot);
    }

    Ok(RunOutcome { model: model.expect("at least one stage"), history, decoders, pools, audit })
}

/// A pool keyed by order position (structures come from the task's labels).
fn pool_for_position<T: Scalar>(ds: &TaskDataset<T>, position: usize) -> Result<SequencePool> {
    let pool = build_pool(ds)?;
    // Re-key under the visit position so replay budgeting follows the visit
    // order rather than raw dataset indices.
    SequencePool::from_text(position, &pool.to_text())
}

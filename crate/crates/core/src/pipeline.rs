//! Command implementations behind the CLI: dataset synthesis, incremental
//! runs, sweeps, offline evaluation, gradient checks, and replay dumps.
//!
//! Everything here works on resolved [`RunConfig`] maps and filesystem paths,
//! so the binary stays a thin argument-parsing layer and integration tests can
//! drive full commands in-process.

use crate::checkpoint::{
    load_checkpoint, save_checkpoint, seg_to_checkpoint, tca_from_checkpoint, tca_to_checkpoint,
};
use crate::config::{DatasetSource, RunConfig};
use crate::data::{
    load_corpus, load_labels, make_synthetic_corpus, save_corpus, split_blurry, write_features,
    write_labels, LabelMode, LabelSpace, TaskDataset,
};
use crate::error::{Error, Result};
use crate::metrics::{aggregate, evaluate_set, ConfusionMatrix, MetricsReport};
use crate::numeric::{gradcheck, GradCheckConfig, GradCheckReport, Matrix, Parameterized, RandomSource};
use crate::replay::{build_replay_set, GenMode, SequencePool};
use crate::seg::{SegModel, TasLossConfig};
use crate::tca::{loss_tca_with_eps, TcaBatch, TcaModel};
use crate::trainer::{self, RunHistory, StageSink, StageSnapshot, Strategy};
use crate::Real;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Refuses to reuse a non-empty directory unless forced.
fn claim_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let occupied = fs::read_dir(dir)?.next().is_some();
        if occupied && !force {
            return Err(Error::Config(format!(
                "output directory {} already exists; pass --force to overwrite",
                dir.display()
            )));
        }
        if occupied {
            fs::remove_dir_all(dir)?;
        }
    }
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Generates a synthetic corpus directory (features, labels, manifests,
/// disjoint mapping) from the `synth.*` settings.
pub fn execute_synth(cfg: &RunConfig, out: &Path, force: bool) -> Result<()> {
    let spec = cfg.synthetic_spec()?;
    let seed = cfg.seed()?;
    claim_dir(out, force)?;
    let mut corpus_rng = RandomSource::new(seed).substream("corpus");
    let corpus = make_synthetic_corpus::<Real>(&spec, &mut corpus_rng)?;
    save_corpus(out, &corpus.datasets, &corpus.space)?;
    fs::write(out.join("config.txt"), cfg.to_text())?;
    Ok(())
}

/// Loads (or generates) the corpus named by the config, in the requested
/// label mode.
pub fn resolve_datasets(cfg: &RunConfig) -> Result<(Vec<TaskDataset<Real>>, LabelSpace)> {
    let mode = cfg.label_mode()?;
    match cfg.dataset_source()? {
        DatasetSource::Synthetic => {
            let spec = cfg.synthetic_spec()?;
            let mut corpus_rng = RandomSource::new(cfg.seed()?).substream("corpus");
            let corpus = make_synthetic_corpus::<Real>(&spec, &mut corpus_rng)?;
            match mode {
                LabelMode::Disjoint => Ok((corpus.datasets, corpus.space)),
                LabelMode::Blurry => {
                    let (datasets, space) = split_blurry(&corpus.datasets, &corpus.space)?;
                    Ok((datasets, space))
                }
            }
        }
        DatasetSource::Dir(dir) => {
            let loaded = load_corpus::<Real>(&dir, mode)?;
            Ok((loaded.datasets, loaded.space))
        }
    }
}

struct RunWriter<'a> {
    dir: PathBuf,
    space: &'a LabelSpace,
}

impl StageSink<Real> for RunWriter<'_> {
    fn on_stage(
        &mut self,
        snapshot: &StageSnapshot,
        model: &SegModel<Real>,
        tca: Option<&TcaModel<Real>>,
        pool: Option<&SequencePool>,
    ) -> Result<()> {
        let b = snapshot.stage;
        save_checkpoint(
            &self.dir.join(format!("checkpoints/seg_stage{b}.ckpt")),
            &seg_to_checkpoint(model),
        )?;
        if let Some(tca) = tca {
            save_checkpoint(
                &self.dir.join(format!("checkpoints/tca_stage{b}.ckpt")),
                &tca_to_checkpoint(tca),
            )?;
        }
        if let Some(pool) = pool {
            fs::write(self.dir.join(format!("pools/stage{b}.pool")), pool.to_text())?;
        }
        fs::write(
            self.dir.join(format!("confusion/stage{b}.txt")),
            snapshot.confusion.to_text(self.space.class_names()),
        )?;
        Ok(())
    }
}

/// Summary of a finished run.
#[derive(Debug)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub history: RunHistory,
}

/// Executes one incremental run and writes the run directory: resolved
/// config, label mapping, metric history, per-stage checkpoints, pools, and
/// confusion matrices.
pub fn execute_run(cfg: &RunConfig, out: &Path, force: bool) -> Result<RunReport> {
    claim_dir(out, force)?;
    fs::create_dir_all(out.join("checkpoints"))?;
    fs::create_dir_all(out.join("confusion"))?;
    fs::create_dir_all(out.join("pools"))?;
    fs::write(out.join("config.txt"), cfg.to_text())?;

    let (datasets, space) = resolve_datasets(cfg)?;
    fs::write(out.join("mapping.txt"), space.to_mapping_string())?;
    let run_cfg = cfg.incremental_run(datasets.len())?;
    let mut writer = RunWriter { dir: out.to_path_buf(), space: &space };
    let outcome = trainer::run_with_sink(&run_cfg, &datasets, &space, Some(&mut writer))?;

    if !matches!(run_cfg.strategy, Strategy::Original) && !outcome.audit.violations().is_empty() {
        return Err(Error::Data(format!(
            "class-incremental access violation: {:?}",
            outcome.audit.violations()
        )));
    }
    fs::write(out.join("history.tsv"), outcome.history.to_table_string())?;
    Ok(RunReport { out_dir: out.to_path_buf(), history: outcome.history })
}

/// Sweepable axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    ReplaySize,
    TcaRatio,
    Seed,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "m" | "M" | "replay" => Ok(SweepAxis::ReplaySize),
            "ratio" => Ok(SweepAxis::TcaRatio),
            "seed" => Ok(SweepAxis::Seed),
            other => Err(Error::Config(format!("unknown sweep axis {other:?}"))),
        }
    }

    fn key(&self) -> &'static str {
        match self {
            SweepAxis::ReplaySize => "run.replay_budget",
            SweepAxis::TcaRatio => "tca.ratio",
            SweepAxis::Seed => "run.seed",
        }
    }
}

/// One child run per value; returns the summary table text.
pub fn execute_sweep(
    cfg: &RunConfig,
    axis: SweepAxis,
    values: &[String],
    out: &Path,
    force: bool,
) -> Result<String> {
    if values.len() < 2 {
        return Err(Error::Config("sweep needs at least two values".into()));
    }
    claim_dir(out, force)?;
    let mut summary = String::from("value\tacc\tedit\tf1_10\tf1_25\tf1_50\n");
    let mut curves: Vec<(String, Vec<f64>)> = Vec::new();
    for value in values {
        let mut child = cfg.clone();
        child.set(axis.key(), value)?;
        let child_dir = out.join(format!("{}_{}", axis.key().replace('.', "_"), value));
        let report = execute_run(&child, &child_dir, force)?;
        let m = report
            .history
            .final_aggregate()
            .ok_or_else(|| Error::Data("sweep child produced no history".into()))?;
        let _ = writeln!(
            summary,
            "{value}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
            m.acc, m.edit, m.f1[0], m.f1[1], m.f1[2]
        );
        curves.push((
            value.clone(),
            report.history.stages.iter().map(|s| s.aggregate.acc).collect(),
        ));
    }
    fs::write(out.join("summary.tsv"), &summary)?;

    // Per-stage accuracy curves with mean/std across values (the seed axis
    // uses this as task-order variance data).
    let stages = curves.iter().map(|(_, c)| c.len()).max().unwrap_or(0);
    let mut curve_text = String::from("stage");
    for (value, _) in &curves {
        let _ = write!(curve_text, "\t{value}");
    }
    curve_text.push_str("\tmean\tstd\n");
    for s in 0..stages {
        let _ = write!(curve_text, "{}", s + 1);
        let mut vals = Vec::new();
        for (_, c) in &curves {
            match c.get(s) {
                Some(v) => {
                    vals.push(*v);
                    let _ = write!(curve_text, "\t{v:.4}");
                }
                None => curve_text.push_str("\t-"),
            }
        }
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
        let _ = writeln!(curve_text, "\t{mean:.4}\t{:.4}", var.sqrt());
    }
    fs::write(out.join("curves.tsv"), curve_text)?;
    Ok(summary)
}

/// Scores a directory of prediction label files against a corpus directory.
///
/// Ground-truth items come from the corpus manifest (`test.manifest` when
/// present, else `train.manifest`); each item pairs with the prediction file
/// of the same name in `pred_dir`.
pub fn execute_eval(pred_dir: &Path, gt_dir: &Path, mapping: &Path) -> Result<MetricsReport> {
    let space = LabelSpace::from_mapping_str(&fs::read_to_string(mapping)?)?;
    let manifest_path = ["test.manifest", "train.manifest"]
        .iter()
        .map(|m| gt_dir.join(m))
        .find(|p| p.exists())
        .ok_or_else(|| Error::Data(format!("no manifest found under {}", gt_dir.display())))?;
    let content = fs::read_to_string(&manifest_path)?;

    let mut per_task_pairs: BTreeMap<usize, Vec<_>> = BTreeMap::new();
    for line in content.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let rest = line.strip_prefix("task ").ok_or_else(|| {
            Error::Consistency(format!("bad manifest line: {line:?}"))
        })?;
        let (task_str, files) = rest
            .split_once(':')
            .ok_or_else(|| Error::Consistency(format!("bad manifest line: {line:?}")))?;
        let task: usize = task_str
            .trim()
            .parse()
            .map_err(|_| Error::Consistency(format!("bad task id in {line:?}")))?;
        let lpath = files
            .split_whitespace()
            .nth(1)
            .ok_or_else(|| Error::Consistency(format!("bad manifest line: {line:?}")))?;
        let gt = load_labels(&gt_dir.join(lpath), &space, task)?;
        let fname = Path::new(lpath)
            .file_name()
            .ok_or_else(|| Error::Consistency(format!("bad label path {lpath:?}")))?;
        let pred_path = pred_dir.join(fname);
        if !pred_path.exists() {
            return Err(Error::Consistency(format!(
                "no prediction file for {} (expected {})",
                lpath,
                pred_path.display()
            )));
        }
        let pred = load_labels(&pred_path, &space, task)?;
        if pred.frames() != gt.frames() {
            return Err(Error::Consistency(format!(
                "{}: prediction has {} frames, ground truth {}",
                pred_path.display(),
                pred.frames(),
                gt.frames()
            )));
        }
        per_task_pairs.entry(task).or_default().push((pred, gt));
    }
    if per_task_pairs.is_empty() {
        return Err(Error::Data("manifest lists no items".into()));
    }

    let mut confusion = ConfusionMatrix::new(space.num_classes());
    let mut per_task = Vec::new();
    for (task, pairs) in &per_task_pairs {
        for (pred, gt) in pairs {
            confusion.accumulate(pred, gt)?;
        }
        per_task.push((*task, evaluate_set(pairs)?));
    }
    let agg = aggregate(&per_task.iter().map(|(_, m)| *m).collect::<Vec<_>>());
    Ok(MetricsReport { per_task, aggregate: agg, confusion })
}

/// Which loss the gradient check drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradCheckTarget {
    Seg,
    Tca,
}

impl GradCheckTarget {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "seg" => Ok(GradCheckTarget::Seg),
            "tca" => Ok(GradCheckTarget::Tca),
            other => Err(Error::Config(format!("unknown gradcheck component {other:?}"))),
        }
    }
}

/// Runs the finite-difference check on the full segmentation or TCA loss at
/// small dimensions.
pub fn execute_gradcheck(target: GradCheckTarget, seed: u64) -> Result<GradCheckReport> {
    let rng = RandomSource::new(seed);
    match target {
        GradCheckTarget::Seg => {
            let (frames, dim, classes) = (20usize, 8usize, 3usize);
            let mut model =
                SegModel::<Real>::new(dim, 8, 2, (0..classes).collect(), &mut rng.substream("init"))?;
            let mut data_rng = rng.substream("data");
            let mut x = Matrix::zeros(frames, dim);
            for v in x.data_mut() {
                *v = data_rng.uniform_in(-1.0, 1.0);
            }
            let y: Vec<usize> = (0..frames).map(|_| data_rng.below(classes)).collect();
            let cfg = TasLossConfig::default();
            let base_lp = crate::numeric::log_softmax_rows(&model.forward(&x)?);
            gradcheck(
                &mut model,
                |m| {
                    m.zero_grad();
                    m.loss_and_grad(&x, &y, &cfg, Some(&base_lp)).expect("shapes fixed")
                },
                &GradCheckConfig::default(),
            )
        }
        GradCheckTarget::Tca => {
            let (batch_size, dim, latent, classes) = (8usize, 8usize, 4usize, 3usize);
            let mut model = TcaModel::<Real>::new(dim, classes, latent, 16, &mut rng.substream("init"));
            let mut data_rng = rng.substream("data");
            let mut frames = Matrix::zeros(batch_size, dim);
            for v in frames.data_mut() {
                *v = data_rng.uniform_in(-1.0, 1.0);
            }
            let actions: Vec<usize> = (0..batch_size).map(|_| data_rng.below(classes)).collect();
            let coherence: Vec<f64> = (0..batch_size).map(|_| data_rng.uniform()).collect();
            let batch = TcaBatch { frames, actions, coherence };
            let mut eps = Matrix::zeros(batch_size, latent);
            for v in eps.data_mut() {
                *v = data_rng.normal();
            }
            gradcheck(
                &mut model,
                |m| {
                    m.zero_grad();
                    loss_tca_with_eps(m, &batch, &eps, 1.0).expect("shapes fixed").total
                },
                &GradCheckConfig::default(),
            )
        }
    }
}

/// Regenerates a replay set from a finished run's cached decoders and pools,
/// dumping each video as FSEQ1 features plus a label file under a
/// provenance-named directory.
pub fn execute_dump_replay(
    run_dir: &Path,
    stage: usize,
    mode: GenMode,
    count: usize,
    out: &Path,
    force: bool,
) -> Result<()> {
    if stage < 2 {
        return Err(Error::Config("replay exists from stage 2 onward".into()));
    }
    let space = LabelSpace::from_mapping_str(&fs::read_to_string(run_dir.join("mapping.txt"))?)?;
    let cfg = RunConfig::from_str(&fs::read_to_string(run_dir.join("config.txt"))?)?;
    let mut decoders = BTreeMap::new();
    let mut pools = BTreeMap::new();
    for p in 1..stage {
        let ckpt_path = run_dir.join(format!("checkpoints/tca_stage{p}.ckpt"));
        if !ckpt_path.exists() {
            return Err(Error::Cache(format!(
                "no cached decoder for stage {p} under {}",
                run_dir.display()
            )));
        }
        decoders.insert(p, tca_from_checkpoint::<Real>(&load_checkpoint(&ckpt_path)?)?);
        let pool_text = fs::read_to_string(run_dir.join(format!("pools/stage{p}.pool")))?;
        pools.insert(p, SequencePool::from_text(p, &pool_text)?);
    }
    let rng = RandomSource::new(cfg.seed()?).substream(&format!("replay/dump/stage{stage}"));
    let videos = build_replay_set(&decoders, &pools, count, mode, &rng)?;

    claim_dir(out, force)?;
    for (i, video) in videos.iter().enumerate() {
        let stem = format!(
            "v{i:03}_t{}_s{}_{}",
            video.provenance.source_task, video.provenance.structure_index, video.provenance.mode
        );
        write_features(&out.join(format!("{stem}.fseq")), &video.features)?;
        write_labels(&out.join(format!("{stem}.txt")), &video.labels, &space)?;
    }
    Ok(())
}

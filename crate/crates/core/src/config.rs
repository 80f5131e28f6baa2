//! Run configuration: flat `section.key = value` text.
//!
//! Every key has a default; a config file overrides defaults and command-line
//! `--set` pairs override the file. The fully resolved map is written into
//! each run directory, and that snapshot alone reproduces the run.

use crate::data::{LabelMode, SyntheticSpec};
use crate::error::{Error, Result};
use crate::replay::GenMode;
use crate::seg::TasLossConfig;
use crate::trainer::{IncrementalRun, SegTrainConfig, Strategy, TcaTrainConfig};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// Default for every known key, in one place.
const DEFAULTS: &[(&str, &str)] = &[
    ("dataset.source", "synthetic"),
    ("dataset.dir", ""),
    ("dataset.mode", "disjoint"),
    ("synth.tasks", "3"),
    ("synth.actions_per_task", "4"),
    ("synth.shared_actions", "0"),
    ("synth.videos_per_task", "25"),
    ("synth.feature_dim", "16"),
    ("synth.segments_min", "4"),
    ("synth.segments_max", "8"),
    ("synth.len_min", "10"),
    ("synth.len_max", "30"),
    ("synth.noise_sigma", "0.3"),
    ("synth.drift_scale", "2.0"),
    ("synth.base_scale", "5.0"),
    ("run.strategy", "tca"),
    ("run.gen_mode", "coherent"),
    ("run.replay_budget", "60"),
    ("run.seed", "1"),
    ("run.shuffle_tasks", "true"),
    ("seg.channels", "64"),
    ("seg.layers", "8"),
    ("seg.epochs", "50"),
    ("seg.lr", "0.0005"),
    ("seg.lambda", "0.15"),
    ("seg.tau", "4.0"),
    ("tca.latent", "16"),
    ("tca.hidden", "64"),
    ("tca.epochs", "150"),
    ("tca.lr", "0.001"),
    ("tca.beta", "1.0"),
    ("tca.ratio", "1.0"),
];

/// Fully resolved configuration map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            entries: DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }
}

impl RunConfig {
    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn from_str(content: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.merge_str(content)?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_str(&content)
    }

    pub fn merge_str(&mut self, content: &str) -> Result<()> {
        for (lineno, raw) in content.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`: {raw:?}", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Sets one key; unknown keys are config errors (catches typos).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !self.entries.contains_key(key) {
            return Err(Error::Config(format!("unknown config key {key:?}")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.entries.get(key).map(|s| s.as_str()).unwrap_or_default()
    }

    /// Canonical text form: sorted `key = value` lines over all keys.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    fn usize_of(&self, key: &str) -> Result<usize> {
        self.get(key)
            .parse()
            .map_err(|_| Error::Config(format!("{key}: expected integer, got {:?}", self.get(key))))
    }

    fn u64_of(&self, key: &str) -> Result<u64> {
        self.get(key)
            .parse()
            .map_err(|_| Error::Config(format!("{key}: expected integer, got {:?}", self.get(key))))
    }

    fn f64_of(&self, key: &str) -> Result<f64> {
        self.get(key)
            .parse()
            .map_err(|_| Error::Config(format!("{key}: expected number, got {:?}", self.get(key))))
    }

    fn bool_of(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(Error::Config(format!("{key}: expected true/false, got {other:?}"))),
        }
    }

    pub fn label_mode(&self) -> Result<LabelMode> {
        LabelMode::parse(self.get("dataset.mode"))
    }

    pub fn seed(&self) -> Result<u64> {
        self.u64_of("run.seed")
    }

    pub fn dataset_source(&self) -> Result<DatasetSource> {
        match self.get("dataset.source") {
            "synthetic" => Ok(DatasetSource::Synthetic),
            "dir" => {
                let dir = self.get("dataset.dir");
                if dir.is_empty() {
                    return Err(Error::Config("dataset.source = dir requires dataset.dir".into()));
                }
                Ok(DatasetSource::Dir(dir.into()))
            }
            other => Err(Error::Config(format!("unknown dataset.source {other:?}"))),
        }
    }

    pub fn synthetic_spec(&self) -> Result<SyntheticSpec> {
        Ok(SyntheticSpec {
            tasks: self.usize_of("synth.tasks")?,
            actions_per_task: self.usize_of("synth.actions_per_task")?,
            shared_actions: self.usize_of("synth.shared_actions")?,
            videos_per_task: self.usize_of("synth.videos_per_task")?,
            feature_dim: self.usize_of("synth.feature_dim")?,
            segments_per_video: (self.usize_of("synth.segments_min")?, self.usize_of("synth.segments_max")?),
            segment_len: (self.usize_of("synth.len_min")?, self.usize_of("synth.len_max")?),
            noise_sigma: self.f64_of("synth.noise_sigma")?,
            drift_scale: self.f64_of("synth.drift_scale")?,
            base_scale: self.f64_of("synth.base_scale")?,
        })
    }

    pub fn strategy(&self) -> Result<Strategy> {
        match self.get("run.strategy") {
            "finetune" => Ok(Strategy::Finetune),
            "exemplar" => Ok(Strategy::Exemplar),
            "original" => Ok(Strategy::Original),
            "tca" => Ok(Strategy::Tca(GenMode::parse(self.get("run.gen_mode"))?)),
            other => Err(Error::Config(format!("unknown run.strategy {other:?}"))),
        }
    }

    pub fn seg_train(&self) -> Result<SegTrainConfig> {
        let cfg = SegTrainConfig {
            channels: self.usize_of("seg.channels")?,
            layers: self.usize_of("seg.layers")?,
            epochs: self.usize_of("seg.epochs")?,
            lr: self.f64_of("seg.lr")?,
            loss: TasLossConfig { lambda: self.f64_of("seg.lambda")?, tau: self.f64_of("seg.tau")? },
        };
        cfg.loss.validate()?;
        Ok(cfg)
    }

    pub fn tca_train(&self) -> Result<TcaTrainConfig> {
        Ok(TcaTrainConfig {
            latent: self.usize_of("tca.latent")?,
            hidden: self.usize_of("tca.hidden")?,
            epochs: self.usize_of("tca.epochs")?,
            lr: self.f64_of("tca.lr")?,
            beta: self.f64_of("tca.beta")?,
            ratio: self.f64_of("tca.ratio")?,
        })
    }

    /// Builds the trainer spec for `num_tasks` tasks. The visit order is
    /// seed-permuted when `run.shuffle_tasks` is set, identity otherwise.
    pub fn incremental_run(&self, num_tasks: usize) -> Result<IncrementalRun> {
        let seed = self.seed()?;
        let mut task_order: Vec<usize> = (0..num_tasks).collect();
        if self.bool_of("run.shuffle_tasks")? {
            let mut order_rng = crate::numeric::RandomSource::new(seed).substream("task_order");
            order_rng.shuffle(&mut task_order);
        }
        Ok(IncrementalRun {
            strategy: self.strategy()?,
            task_order,
            replay_budget: self.usize_of("run.replay_budget")?,
            seg: self.seg_train()?,
            tca: self.tca_train()?,
            seed,
        })
    }
}

/// Where the run's datasets come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetSource {
    Synthetic,
    Dir(std::path::PathBuf),
}

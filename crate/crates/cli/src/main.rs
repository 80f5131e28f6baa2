//! `itas` — incremental temporal action segmentation with generative replay.

use clap::{Args, Parser, Subcommand};
use itas_core::config::RunConfig;
use itas_core::pipeline::{
    execute_dump_replay, execute_eval, execute_gradcheck, execute_run, execute_sweep,
    execute_synth, GradCheckTarget, SweepAxis,
};
use itas_core::replay::GenMode;
use itas_core::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Environment variable naming the default output root.
const OUT_ROOT_ENV: &str = "ITAS_OUT_ROOT";

#[derive(Parser)]
#[command(name = "itas", version)]
#[command(about = "Incremental temporal action segmentation with temporally coherent replay")]
#[command(long_about = "Trains a frame-wise action segmentation model over a sequence of tasks,\n\
mitigating forgetting by replaying videos synthesized from per-task conditional\n\
VAE decoders. Ships a synthetic corpus generator, baseline replay strategies,\n\
ablation sweeps, offline metric evaluation, and gradient checks.\n\n\
EXAMPLES:\n  itas synth --out data/demo --seed 7\n  \
itas run --set dataset.source=dir --set dataset.dir=data/demo --out runs/demo\n  \
itas run --set run.strategy=finetune --seed 3 --out runs/ft3\n  \
itas sweep --axis m --values 30,60,90,120 --out runs/sweep_m\n  \
itas eval --pred preds/ --gt data/demo --mapping data/demo/mapping.txt\n  \
itas gradcheck --component tca --seed 1")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Config file of `section.key = value` lines.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override one config key (repeatable), e.g. --set seg.epochs=20.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,

    /// Shorthand for --set run.seed=N.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// Output directory; defaults under $ITAS_OUT_ROOT (or ./runs).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Overwrite an existing output directory.
    #[arg(long)]
    force: bool,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        for pair in &self.sets {
            let (k, v) = pair.split_once('=').ok_or_else(|| {
                Error::Config(format!("--set expects key=value, got {pair:?}"))
            })?;
            cfg.set(k.trim(), v.trim())?;
        }
        if let Some(seed) = self.seed {
            cfg.set("run.seed", &seed.to_string())?;
        }
        Ok(cfg)
    }

    fn out_dir(&self, kind: &str, cfg: &RunConfig) -> Result<PathBuf, Error> {
        if let Some(out) = &self.out {
            return Ok(out.clone());
        }
        let root = std::env::var(OUT_ROOT_ENV).unwrap_or_else(|_| "runs".to_string());
        let strategy = cfg.get("run.strategy");
        let seed = cfg.seed()?;
        Ok(Path::new(&root).join(format!("{kind}-{strategy}-seed{seed}")))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset directory.
    Synth {
        #[command(flatten)]
        common: ConfigArgs,
    },
    /// Run the incremental training protocol.
    Run {
        #[command(flatten)]
        common: ConfigArgs,
    },
    /// Run one child run per value of a swept axis (m | ratio | seed).
    Sweep {
        #[command(flatten)]
        common: ConfigArgs,
        /// Axis to sweep: m (replay size), ratio (TCA data), seed (task order).
        #[arg(long)]
        axis: String,
        /// Comma-separated values, e.g. 30,60,90,120.
        #[arg(long)]
        values: String,
    },
    /// Score prediction label files against a dataset directory.
    Eval {
        /// Directory of prediction label files (named like the gt label files).
        #[arg(long, value_name = "DIR")]
        pred: PathBuf,
        /// Dataset directory with manifests and label files.
        #[arg(long, value_name = "DIR")]
        gt: PathBuf,
        /// Class mapping file.
        #[arg(long, value_name = "FILE")]
        mapping: PathBuf,
    },
    /// Finite-difference check of the full training losses.
    Gradcheck {
        /// Component to check: seg | tca.
        #[arg(long)]
        component: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Regenerate and dump a replay set from a finished run.
    DumpReplay {
        /// Run directory with cached decoders and pools.
        #[arg(long, value_name = "DIR")]
        run: PathBuf,
        /// Stage whose replay set to rebuild (>= 2).
        #[arg(long)]
        stage: usize,
        /// Generation mode: coherent | static | random.
        #[arg(long, default_value = "coherent")]
        mode: String,
        /// Number of videos.
        #[arg(long, default_value_t = 60)]
        count: usize,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Data(_)
        | Error::Format { .. }
        | Error::Label(_)
        | Error::Consistency(_)
        | Error::Pool(_)
        | Error::Cache(_) => 3,
        Error::Budget(_) => 4,
        Error::Numeric(_) | Error::Determinism(_) | Error::Shape { .. } => 5,
        Error::Io(_) => 6,
    }
}

fn run_command(command: Command) -> Result<(), Error> {
    match command {
        Command::Synth { common } => {
            let cfg = common.resolve()?;
            let out = common.out_dir("data", &cfg)?;
            execute_synth(&cfg, &out, common.force)?;
            println!("wrote dataset to {}", out.display());
        }
        Command::Run { common } => {
            let cfg = common.resolve()?;
            let out = common.out_dir("run", &cfg)?;
            let report = execute_run(&cfg, &out, common.force)?;
            print!("{}", report.history.to_table_string());
            if let Some(m) = report.history.final_aggregate() {
                println!(
                    "final task-averaged: acc {:.2} edit {:.2} f1@10 {:.2} f1@25 {:.2} f1@50 {:.2}",
                    m.acc, m.edit, m.f1[0], m.f1[1], m.f1[2]
                );
            }
            println!("run directory: {}", out.display());
        }
        Command::Sweep { common, axis, values } => {
            let cfg = common.resolve()?;
            let axis = SweepAxis::parse(&axis)?;
            let values: Vec<String> =
                values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
            let out = common.out_dir("sweep", &cfg)?;
            let summary = execute_sweep(&cfg, axis, &values, &out, common.force)?;
            print!("{summary}");
            println!("sweep directory: {}", out.display());
        }
        Command::Eval { pred, gt, mapping } => {
            let report = execute_eval(&pred, &gt, &mapping)?;
            print!("{}", report.to_table_string());
        }
        Command::Gradcheck { component, seed } => {
            let target = GradCheckTarget::parse(&component)?;
            let report = execute_gradcheck(target, seed)?;
            println!("{}", report.summary());
            if !report.passed() {
                return Err(Error::Numeric(format!(
                    "gradient check failed: {}",
                    report.summary()
                )));
            }
            println!("gradcheck {component}: PASS");
        }
        Command::DumpReplay { run, stage, mode, count, out, force } => {
            let mode = GenMode::parse(&mode)?;
            execute_dump_replay(&run, stage, mode, count, &out, force)?;
            println!("wrote {count} replay videos to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_command(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

//! Dataset directory layout and manifests.
//!
//! A corpus directory holds `mapping.txt`, `train.manifest`, `test.manifest`,
//! and per-video feature/label files. Manifest lines read
//! `task <b>: <feature path> <label path>` with paths relative to the
//! directory.

use super::features::{load_features, write_features};
use super::labels::{load_labels, write_labels, LabelMode, LabelSpace};
use super::{TaskDataset, VideoItem};
use crate::error::{Error, Result};
use crate::numeric::Scalar;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// A corpus read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedCorpus<T> {
    pub datasets: Vec<TaskDataset<T>>,
    pub space: LabelSpace,
}

/// Writes a full corpus directory. Fails if `dir` already contains a mapping.
pub fn save_corpus<T: Scalar>(
    dir: &Path,
    datasets: &[TaskDataset<T>],
    space: &LabelSpace,
) -> Result<()> {
    fs::create_dir_all(dir.join("features"))?;
    fs::create_dir_all(dir.join("labels"))?;
    fs::write(dir.join("mapping.txt"), space.to_mapping_string())?;

    let mut manifests: BTreeMap<&str, String> = BTreeMap::new();
    for ds in datasets {
        for (split, items) in [("train", &ds.train), ("test", &ds.test)] {
            let manifest = manifests.entry(split).or_default();
            for item in items {
                let stem = item.features.source_id();
                let fpath = format!("features/{stem}.fseq");
                let lpath = format!("labels/{stem}.txt");
                write_features(&dir.join(&fpath), &item.features)?;
                write_labels(&dir.join(&lpath), &item.labels, space)?;
                let _ = writeln!(manifest, "task {}: {} {}", ds.task, fpath, lpath);
            }
        }
    }
    for (split, content) in manifests {
        fs::write(dir.join(format!("{split}.manifest")), content)?;
    }
    Ok(())
}

fn parse_manifest(content: &str, path: &Path) -> Result<Vec<(usize, String, String)>> {
    let mut entries = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = || {
            Error::Format {
                path: path.to_path_buf(),
                offset: lineno as u64,
                msg: format!("bad manifest line: {line:?}"),
            }
        };
        let rest = line.strip_prefix("task ").ok_or_else(err)?;
        let (task_str, files) = rest.split_once(':').ok_or_else(err)?;
        let task: usize = task_str.trim().parse().map_err(|_| err())?;
        let mut parts = files.split_whitespace();
        let fpath = parts.next().ok_or_else(err)?.to_string();
        let lpath = parts.next().ok_or_else(err)?.to_string();
        entries.push((task, fpath, lpath));
    }
    Ok(entries)
}

/// Loads a corpus directory and remaps onto the requested label mode.
///
/// The stored mapping is the disjoint table; blurry mode is derived from it
/// so ids stay deterministic across loads.
pub fn load_corpus<T: Scalar>(dir: &Path, mode: LabelMode) -> Result<LoadedCorpus<T>> {
    let mapping = fs::read_to_string(dir.join("mapping.txt"))?;
    let space = LabelSpace::from_mapping_str(&mapping)?;
    if space.mode() != LabelMode::Disjoint {
        return Err(Error::Label(
            "corpus mapping must be task-qualified (disjoint); derive blurry at load time".into(),
        ));
    }

    let mut tasks: BTreeMap<usize, TaskDataset<T>> = BTreeMap::new();
    for split in ["train", "test"] {
        let mpath = dir.join(format!("{split}.manifest"));
        let content = fs::read_to_string(&mpath)?;
        for (task, fpath, lpath) in parse_manifest(&content, &mpath)? {
            let features = load_features(&dir.join(&fpath))?;
            let labels = load_labels(&dir.join(&lpath), &space, task)?;
            if labels.frames() != features.frames() {
                return Err(Error::Consistency(format!(
                    "{fpath}: {} feature frames but {} label lines",
                    features.frames(),
                    labels.frames()
                )));
            }
            let item = VideoItem { features, labels };
            let entry = tasks.entry(task).or_insert_with(|| TaskDataset {
                task,
                classes: space.task_classes(task),
                train: Vec::new(),
                test: Vec::new(),
            });
            if split == "train" {
                entry.train.push(item);
            } else {
                entry.test.push(item);
            }
        }
    }

    let datasets: Vec<TaskDataset<T>> = tasks.into_values().collect();
    for ds in &datasets {
        ds.check_invariants()?;
    }
    match mode {
        LabelMode::Disjoint => Ok(LoadedCorpus { datasets, space }),
        LabelMode::Blurry => {
            let (datasets, space) = super::split_blurry(&datasets, &space)?;
            Ok(LoadedCorpus { datasets, space })
        }
    }
}

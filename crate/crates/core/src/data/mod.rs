//! Dataset loading, task partitioning, and synthetic corpora.

mod features;
mod labels;
mod manifest;
mod synthetic;

pub use features::{load_features, write_features, FeatureSequence};
pub use labels::{
    load_labels, write_labels, ClassId, LabelMode, LabelSpace, Segment, SegmentLabeling,
};
pub use manifest::{load_corpus, save_corpus, LoadedCorpus};
pub use synthetic::{make_synthetic_corpus, ActionBasis, SyntheticCorpus, SyntheticSpec};

use crate::error::{Error, Result};
use crate::numeric::Scalar;

/// One video: features paired with a labeling of equal frame count.
#[derive(Debug, Clone)]
pub struct VideoItem<T> {
    pub features: FeatureSequence<T>,
    pub labels: SegmentLabeling,
}

impl<T: Scalar> VideoItem<T> {
    pub fn new(features: FeatureSequence<T>, labels: SegmentLabeling) -> Result<Self> {
        if features.frames() != labels.frames() {
            return Err(Error::Consistency(format!(
                "{}: {} feature frames but {} label lines",
                features.source_id(),
                features.frames(),
                labels.frames()
            )));
        }
        Ok(Self { features, labels })
    }
}

/// Training and test items of one incremental task.
#[derive(Debug, Clone)]
pub struct TaskDataset<T> {
    pub task: usize,
    /// Sorted class set Y_b.
    pub classes: Vec<ClassId>,
    pub train: Vec<VideoItem<T>>,
    pub test: Vec<VideoItem<T>>,
}

impl<T: Scalar> TaskDataset<T> {
    /// Every label of every item must belong to Y_b.
    pub fn check_invariants(&self) -> Result<()> {
        for item in self.train.iter().chain(&self.test) {
            item.labels.check_invariants()?;
            if item.labels.frames() != item.features.frames() {
                return Err(Error::Consistency(format!(
                    "task {}: item {} length mismatch",
                    self.task,
                    item.features.source_id()
                )));
            }
            for &c in item.labels.framewise() {
                if !self.classes.contains(&c) {
                    return Err(Error::Label(format!(
                        "task {}: class {c} outside the task class set",
                        self.task
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Remaps disjoint-labeled datasets onto the blurry space where identical
/// action names across tasks share one class id.
pub fn split_blurry<T: Scalar>(
    datasets: &[TaskDataset<T>],
    disjoint: &LabelSpace,
) -> Result<(Vec<TaskDataset<T>>, LabelSpace)> {
    if disjoint.mode() != LabelMode::Disjoint {
        return Err(Error::Label("split_blurry expects a disjoint label space".into()));
    }
    // Recover per-task vocabularies in class-id order so blurry ids are
    // deterministic.
    let mut per_task_names: Vec<Vec<String>> = vec![Vec::new(); datasets.len()];
    let mut id_task: Vec<usize> = Vec::with_capacity(disjoint.num_classes());
    for id in 0..disjoint.num_classes() {
        let qualified = disjoint.class_name(id);
        let (raw, task) = qualified
            .rsplit_once("@t")
            .and_then(|(n, t)| t.parse::<usize>().ok().map(|t| (n, t)))
            .ok_or_else(|| Error::Label(format!("class name {qualified:?} is not task-qualified")))?;
        if task >= per_task_names.len() {
            return Err(Error::Label(format!("class {qualified:?} references unknown task {task}")));
        }
        per_task_names[task].push(raw.to_string());
        id_task.push(task);
    }
    let blurry = LabelSpace::build(LabelMode::Blurry, &per_task_names)?;

    let remap = |old: ClassId| -> Result<ClassId> {
        let raw = disjoint.raw_name(old);
        blurry.resolve(id_task[old], raw)
    };

    let mut out = Vec::with_capacity(datasets.len());
    for ds in datasets {
        let mut classes: Vec<ClassId> = ds.classes.iter().map(|&c| remap(c)).collect::<Result<_>>()?;
        classes.sort_unstable();
        classes.dedup();
        let convert = |items: &[VideoItem<T>]| -> Result<Vec<VideoItem<T>>> {
            items
                .iter()
                .map(|item| {
                    let labels = item.labels.remap(|c| remap(c).expect("label space covers ids"))?;
                    Ok(VideoItem { features: item.features.clone(), labels })
                })
                .collect()
        };
        out.push(TaskDataset {
            task: ds.task,
            classes,
            train: convert(&ds.train)?,
            test: convert(&ds.test)?,
        });
    }
    Ok((out, blurry))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::RandomSource;

    fn shared_corpus(shared: usize) -> SyntheticCorpus<f64> {
        let spec = SyntheticSpec {
            tasks: 3,
            actions_per_task: 4,
            shared_actions: shared,
            videos_per_task: 5,
            feature_dim: 4,
            segments_per_video: (2, 3),
            segment_len: (2, 4),
            noise_sigma: 0.0,
            drift_scale: 1.0,
            base_scale: 2.0,
        };
        make_synthetic_corpus(&spec, &mut RandomSource::new(5)).unwrap()
    }

    #[test]
    fn no_shared_names_matches_disjoint_counts() {
        let corpus = shared_corpus(0);
        let (blurry_sets, blurry) = split_blurry(&corpus.datasets, &corpus.space).unwrap();
        assert_eq!(blurry.num_classes(), corpus.space.num_classes());
        for (a, b) in corpus.datasets.iter().zip(&blurry_sets) {
            assert_eq!(a.classes.len(), b.classes.len());
        }
    }

    #[test]
    fn shared_names_collapse_to_one_id() {
        let corpus = shared_corpus(2);
        let (blurry_sets, blurry) = split_blurry(&corpus.datasets, &corpus.space).unwrap();
        // 3 tasks × 4 actions, 2 shared: blurry keeps 2 shared + 3×2 local.
        assert_eq!(blurry.num_classes(), 8);
        assert!(blurry.num_classes() <= corpus.space.num_classes());
        let shared_id = blurry.resolve(0, "shared_a0").unwrap();
        assert_eq!(blurry.resolve(1, "shared_a0").unwrap(), shared_id);
        for ds in &blurry_sets {
            assert!(ds.classes.contains(&shared_id));
            ds.check_invariants().unwrap();
        }
    }

    #[test]
    fn blurry_class_count_never_exceeds_disjoint() {
        for shared in 0..=4 {
            let corpus = shared_corpus(shared);
            let (_, blurry) = split_blurry(&corpus.datasets, &corpus.space).unwrap();
            assert!(blurry.num_classes() <= corpus.space.num_classes());
        }
    }
}

//! Segmentation evaluation: frame accuracy, segmental edit score, F1 at IoU
//! thresholds, task-averaged aggregation, and confusion accumulation.
//!
//! All functions are pure. Set-level scores follow the standard protocol:
//! accuracy pools frames across videos, the edit score is averaged per video,
//! and F1 counts are summed before the harmonic mean.

use crate::data::{ClassId, SegmentLabeling};
use crate::error::{Error, Result};
use std::fmt::Write as _;

/// Standard F1 overlap thresholds.
pub const F1_THRESHOLDS: [f64; 3] = [0.10, 0.25, 0.50];

/// Frame-wise accuracy in percent.
pub fn frame_accuracy(pred: &SegmentLabeling, gt: &SegmentLabeling) -> Result<f64> {
    if pred.frames() != gt.frames() {
        return Err(Error::Consistency(format!(
            "prediction covers {} frames, ground truth {}",
            pred.frames(),
            gt.frames()
        )));
    }
    let correct = pred
        .framewise()
        .iter()
        .zip(gt.framewise())
        .filter(|(a, b)| a == b)
        .count();
    Ok(100.0 * correct as f64 / gt.frames() as f64)
}

/// Unit-cost Levenshtein distance between two action sequences.
fn levenshtein(a: &[ClassId], b: &[ClassId]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, &ai) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &bj) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ai != bj);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Edit score over segment action sequences, duration-invariant:
/// `100·(1 − dist / max(|pred|, |gt|))`. Two empty sequences score 100.
pub fn edit_score_sequences(pred: &[ClassId], gt: &[ClassId]) -> f64 {
    let denom = pred.len().max(gt.len());
    if denom == 0 {
        return 100.0;
    }
    100.0 * (1.0 - levenshtein(pred, gt) as f64 / denom as f64)
}

/// Edit score between two labelings.
pub fn edit_score(pred: &SegmentLabeling, gt: &SegmentLabeling) -> f64 {
    edit_score_sequences(&pred.action_sequence(), &gt.action_sequence())
}

/// Match counts behind an F1 value at one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentMatch {
    pub threshold_pct: u32,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl SegmentMatch {
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            // Both labelings empty of segments; scored perfect by convention.
            return 100.0;
        }
        100.0 * 2.0 * self.tp as f64 / denom as f64
    }
}

fn interval_iou(a: (usize, usize), b: (usize, usize)) -> f64 {
    let inter_lo = a.0.max(b.0);
    let inter_hi = a.1.min(b.1);
    let inter = if inter_hi >= inter_lo { inter_hi - inter_lo + 1 } else { 0 };
    let len_a = a.1 - a.0 + 1;
    let len_b = b.1 - b.0 + 1;
    inter as f64 / (len_a + len_b - inter) as f64
}

/// Greedy in-order segment matching at IoU threshold `k` ∈ (0, 1) over raw
/// segment lists.
///
/// Each predicted segment, in temporal order, takes the best-IoU unmatched
/// ground-truth segment of its class; a match at or above `k` is a true
/// positive and consumes that segment, anything else is a false positive.
/// The raw form accepts over-segmented inputs (adjacent same-class segments)
/// that a [`SegmentLabeling`] would merge.
pub fn segment_match_raw(
    pred: &[crate::data::Segment],
    gt: &[crate::data::Segment],
    k: f64,
) -> Result<SegmentMatch> {
    if !(0.0..1.0).contains(&k) || k <= 0.0 {
        return Err(Error::Config(format!("IoU threshold must be in (0,1), got {k}")));
    }
    let mut used = vec![false; gt.len()];
    let mut tp = 0usize;
    let mut fp = 0usize;
    for p in pred {
        let mut best: Option<(usize, f64)> = None;
        for (j, g) in gt.iter().enumerate() {
            if used[j] || g.action != p.action {
                continue;
            }
            let iou = interval_iou((p.start, p.end()), (g.start, g.end()));
            if best.map_or(true, |(_, b)| iou > b) {
                best = Some((j, iou));
            }
        }
        match best {
            Some((j, iou)) if iou >= k => {
                used[j] = true;
                tp += 1;
            }
            _ => fp += 1,
        }
    }
    let fn_ = used.iter().filter(|u| !**u).count();
    Ok(SegmentMatch { threshold_pct: (k * 100.0).round() as u32, tp, fp, fn_ })
}

/// [`segment_match_raw`] over two labelings.
pub fn segment_match(pred: &SegmentLabeling, gt: &SegmentLabeling, k: f64) -> Result<SegmentMatch> {
    segment_match_raw(pred.segments(), gt.segments(), k)
}

/// F1 percentage at threshold `k` plus the underlying counts.
pub fn f1_at(pred: &SegmentLabeling, gt: &SegmentLabeling, k: f64) -> Result<(f64, SegmentMatch)> {
    let m = segment_match(pred, gt, k)?;
    Ok((m.f1(), m))
}

/// One task's (or one aggregate's) metric values, all in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskMetrics {
    pub acc: f64,
    pub edit: f64,
    pub f1: [f64; 3],
}

impl TaskMetrics {
    pub fn zeros() -> Self {
        Self { acc: 0.0, edit: 0.0, f1: [0.0; 3] }
    }
}

/// Scores a set of (prediction, ground truth) pairs as one task.
pub fn evaluate_set(pairs: &[(SegmentLabeling, SegmentLabeling)]) -> Result<TaskMetrics> {
    if pairs.is_empty() {
        return Err(Error::Data("no prediction/ground-truth pairs to evaluate".into()));
    }
    let mut correct = 0usize;
    let mut total = 0usize;
    let mut edit_sum = 0.0;
    let mut counts = [SegmentMatch { threshold_pct: 0, tp: 0, fp: 0, fn_: 0 }; 3];
    for (pred, gt) in pairs {
        if pred.frames() != gt.frames() {
            return Err(Error::Consistency(format!(
                "pair length mismatch: {} vs {}",
                pred.frames(),
                gt.frames()
            )));
        }
        correct += pred
            .framewise()
            .iter()
            .zip(gt.framewise())
            .filter(|(a, b)| a == b)
            .count();
        total += gt.frames();
        edit_sum += edit_score(pred, gt);
        for (slot, &k) in counts.iter_mut().zip(&F1_THRESHOLDS) {
            let m = segment_match(pred, gt, k)?;
            slot.threshold_pct = m.threshold_pct;
            slot.tp += m.tp;
            slot.fp += m.fp;
            slot.fn_ += m.fn_;
        }
    }
    Ok(TaskMetrics {
        acc: 100.0 * correct as f64 / total as f64,
        edit: edit_sum / pairs.len() as f64,
        f1: [counts[0].f1(), counts[1].f1(), counts[2].f1()],
    })
}

/// Unweighted mean over per-task reports.
pub fn aggregate(reports: &[TaskMetrics]) -> TaskMetrics {
    if reports.is_empty() {
        return TaskMetrics::zeros();
    }
    let n = reports.len() as f64;
    let mut out = TaskMetrics::zeros();
    for r in reports {
        out.acc += r.acc / n;
        out.edit += r.edit / n;
        for i in 0..3 {
            out.f1[i] += r.f1[i] / n;
        }
    }
    out
}

/// A×A frame count matrix, rows = ground truth, columns = prediction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    num_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        Self { num_classes, counts: vec![0; num_classes * num_classes] }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn count(&self, gt: ClassId, pred: ClassId) -> u64 {
        self.counts[gt * self.num_classes + pred]
    }

    /// Adds per-frame counts from one prediction pair.
    pub fn accumulate(&mut self, pred: &SegmentLabeling, gt: &SegmentLabeling) -> Result<()> {
        if pred.frames() != gt.frames() {
            return Err(Error::Consistency("confusion pair length mismatch".into()));
        }
        for (&p, &g) in pred.framewise().iter().zip(gt.framewise()) {
            if p >= self.num_classes || g >= self.num_classes {
                return Err(Error::Label(format!(
                    "class id {} outside confusion matrix of {} classes",
                    p.max(g),
                    self.num_classes
                )));
            }
            self.counts[g * self.num_classes + p] += 1;
        }
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_total(&self, gt: ClassId) -> u64 {
        (0..self.num_classes).map(|p| self.count(gt, p)).sum()
    }

    /// Trace / total in percent; equals pooled frame accuracy.
    pub fn trace_accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let trace: u64 = (0..self.num_classes).map(|i| self.count(i, i)).sum();
        100.0 * trace as f64 / total as f64
    }

    /// Dense text grid, rows normalized by ground-truth count; rows without
    /// instances are flagged.
    pub fn to_text(&self, class_names: &[String]) -> String {
        let mut out = String::from("gt\\pred");
        for name in class_names {
            let _ = write!(out, "\t{name}");
        }
        out.push('\n');
        for g in 0..self.num_classes {
            let row_total = self.row_total(g);
            let flag = if row_total == 0 { " (no instances)" } else { "" };
            let _ = write!(out, "{}{}", class_names[g], flag);
            for p in 0..self.num_classes {
                if row_total == 0 {
                    let _ = write!(out, "\t-");
                } else {
                    let _ = write!(out, "\t{:.4}", self.count(g, p) as f64 / row_total as f64);
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Per-task metrics plus the aggregate and the pooled confusion matrix.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    /// `(task id, metrics)` in evaluation order.
    pub per_task: Vec<(usize, TaskMetrics)>,
    pub aggregate: TaskMetrics,
    pub confusion: ConfusionMatrix,
}

impl MetricsReport {
    /// Delimited table: one row per task plus an aggregate row.
    pub fn to_table_string(&self) -> String {
        let mut out = String::from("task\tacc\tedit\tf1_10\tf1_25\tf1_50\n");
        for (task, m) in &self.per_task {
            let _ = writeln!(
                out,
                "{task}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
                m.acc, m.edit, m.f1[0], m.f1[1], m.f1[2]
            );
        }
        let a = &self.aggregate;
        let _ = writeln!(
            out,
            "aggregate\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
            a.acc, a.edit, a.f1[0], a.f1[1], a.f1[2]
        );
        out
    }
}

//! Segment labelings, label spaces, and their text formats.
//!
//! A labeling is kept in two always-consistent views: an ordered segment list
//! `(action, start, length)` and the frame-wise class vector. Frame indices
//! are 0-based internally; the 1-based convention appears only at I/O and
//! display boundaries.

use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Global class identifier, dense from 0.
pub type ClassId = usize;

/// One temporal segment: `len` frames of `action` starting at frame `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub action: ClassId,
    pub start: usize,
    pub len: usize,
}

impl Segment {
    /// Inclusive frame interval `[start, end()]`.
    pub fn end(&self) -> usize {
        self.start + self.len - 1
    }
}

/// Dual view of a video's labels: ordered segments and frame-wise classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentLabeling {
    segments: Vec<Segment>,
    framewise: Vec<ClassId>,
}

impl SegmentLabeling {
    /// Builds from a frame-wise vector by run-length encoding.
    pub fn from_framewise(framewise: Vec<ClassId>) -> Result<Self> {
        if framewise.is_empty() {
            return Err(Error::Data("labeling must cover at least one frame".into()));
        }
        let mut segments = Vec::new();
        let mut start = 0;
        for t in 1..=framewise.len() {
            if t == framewise.len() || framewise[t] != framewise[start] {
                segments.push(Segment { action: framewise[start], start, len: t - start });
                start = t;
            }
        }
        Ok(Self { segments, framewise })
    }

    /// Builds from `(action, len)` runs; adjacent runs must differ in action.
    pub fn from_runs(runs: &[(ClassId, usize)]) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::Data("labeling must contain at least one segment".into()));
        }
        let mut framewise = Vec::new();
        for (i, &(action, len)) in runs.iter().enumerate() {
            if len == 0 {
                return Err(Error::Data(format!("segment {i} has zero length")));
            }
            if i > 0 && runs[i - 1].0 == action {
                return Err(Error::Data(format!(
                    "adjacent segments {i} and {} share action {action}",
                    i - 1
                )));
            }
            framewise.extend(std::iter::repeat(action).take(len));
        }
        Self::from_framewise(framewise)
    }

    pub fn frames(&self) -> usize {
        self.framewise.len()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn framewise(&self) -> &[ClassId] {
        &self.framewise
    }

    /// Ordered action sequence (one entry per segment).
    pub fn action_sequence(&self) -> Vec<ClassId> {
        self.segments.iter().map(|s| s.action).collect()
    }

    /// Symbolic structure `(action, len)` runs.
    pub fn runs(&self) -> Vec<(ClassId, usize)> {
        self.segments.iter().map(|s| (s.action, s.len)).collect()
    }

    /// Remaps every class id; merges segments that become adjacent duplicates.
    pub fn remap(&self, f: impl Fn(ClassId) -> ClassId) -> Result<Self> {
        Self::from_framewise(self.framewise.iter().map(|&c| f(c)).collect())
    }

    /// Checks the segment recursion (`t_{n+1} = t_n + len_n`, first start 0,
    /// total length T) and view consistency. Construction enforces this;
    /// the method exists for tests and loaded artifacts.
    pub fn check_invariants(&self) -> Result<()> {
        let mut expected_start = 0;
        for (i, s) in self.segments.iter().enumerate() {
            if s.len == 0 {
                return Err(Error::Consistency(format!("segment {i} empty")));
            }
            if s.start != expected_start {
                return Err(Error::Consistency(format!(
                    "segment {i} starts at {} expected {}",
                    s.start, expected_start
                )));
            }
            if i > 0 && self.segments[i - 1].action == s.action {
                return Err(Error::Consistency(format!("segments {} and {i} share action", i - 1)));
            }
            for t in s.start..s.start + s.len {
                if self.framewise[t] != s.action {
                    return Err(Error::Consistency(format!("frame {t} disagrees with segment {i}")));
                }
            }
            expected_start += s.len;
        }
        if expected_start != self.framewise.len() {
            return Err(Error::Consistency(format!(
                "segments cover {expected_start} frames, framewise has {}",
                self.framewise.len()
            )));
        }
        Ok(())
    }
}

/// Disjoint or blurry treatment of action names shared across tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMode {
    /// Same name in different tasks = different classes.
    Disjoint,
    /// Same name in different tasks = one class.
    Blurry,
}

impl LabelMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            LabelMode::Disjoint => "disjoint",
            LabelMode::Blurry => "blurry",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "disjoint" => Ok(LabelMode::Disjoint),
            "blurry" => Ok(LabelMode::Blurry),
            other => Err(Error::Config(format!("unknown label mode {other:?}"))),
        }
    }
}

/// Global table mapping `(task, local action name)` to a dense class id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSpace {
    mode: LabelMode,
    lookup: BTreeMap<(usize, String), ClassId>,
    /// Display name per class id: `name@t<task>` for disjoint, raw for blurry.
    class_names: Vec<String>,
}

impl LabelSpace {
    /// Builds from per-task action name lists; ids are assigned densely in
    /// task order, then name-list order, first occurrence winning in blurry
    /// mode.
    pub fn build(mode: LabelMode, per_task_names: &[Vec<String>]) -> Result<Self> {
        let mut lookup = BTreeMap::new();
        let mut class_names = Vec::new();
        let mut blurry_ids: BTreeMap<String, ClassId> = BTreeMap::new();
        for (task, names) in per_task_names.iter().enumerate() {
            for name in names {
                let key = (task, name.clone());
                if lookup.contains_key(&key) {
                    return Err(Error::Label(format!(
                        "action {name:?} listed twice for task {task}"
                    )));
                }
                let id = match mode {
                    LabelMode::Disjoint => {
                        let id = class_names.len();
                        class_names.push(format!("{name}@t{task}"));
                        id
                    }
                    LabelMode::Blurry => *blurry_ids.entry(name.clone()).or_insert_with(|| {
                        let id = class_names.len();
                        class_names.push(name.clone());
                        id
                    }),
                };
                lookup.insert(key, id);
            }
        }
        Ok(Self { mode, lookup, class_names })
    }

    pub fn mode(&self) -> LabelMode {
        self.mode
    }

    /// Total class count A.
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_name(&self, id: ClassId) -> &str {
        &self.class_names[id]
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn resolve(&self, task: usize, name: &str) -> Result<ClassId> {
        if let Some(&id) = self.lookup.get(&(task, name.to_string())) {
            return Ok(id);
        }
        // Blurry classes are task-independent, so a space parsed from a
        // mapping file resolves names directly against the class table.
        if self.mode == LabelMode::Blurry {
            if let Some(pos) = self.class_names.iter().position(|n| n == name) {
                return Ok(pos);
            }
        }
        Err(Error::Label(format!("unknown action {name:?} in task {task}")))
    }

    /// Class set of one task.
    pub fn task_classes(&self, task: usize) -> Vec<ClassId> {
        let mut ids: Vec<ClassId> = self
            .lookup
            .iter()
            .filter(|((t, _), _)| *t == task)
            .map(|(_, &id)| id)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Raw (unqualified) name of a class as it appears in label files.
    /// For disjoint classes this strips the task qualifier.
    pub fn raw_name(&self, id: ClassId) -> &str {
        let name = self.class_name(id);
        match self.mode {
            LabelMode::Disjoint => name.rsplit_once("@t").map_or(name, |(n, _)| n),
            LabelMode::Blurry => name,
        }
    }

    /// Serializes as mapping-file lines: `<global id> <class name>`.
    pub fn to_mapping_string(&self) -> String {
        let mut out = String::new();
        for (id, name) in self.class_names.iter().enumerate() {
            let _ = writeln!(out, "{id} {name}");
        }
        out
    }

    /// Parses a mapping file; ids must be dense from 0. Disjoint entries are
    /// recognized by the `@t<task>` qualifier.
    pub fn from_mapping_str(content: &str) -> Result<Self> {
        let mut class_names = Vec::new();
        let mut qualified = 0usize;
        let mut total = 0usize;
        for (lineno, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (id_str, name) = line
                .split_once(' ')
                .ok_or_else(|| Error::Label(format!("mapping line {} malformed: {line:?}", lineno + 1)))?;
            let id: usize = id_str
                .parse()
                .map_err(|_| Error::Label(format!("mapping line {}: bad id {id_str:?}", lineno + 1)))?;
            if id != class_names.len() {
                return Err(Error::Label(format!(
                    "mapping ids must be dense from 0; line {} has id {id}",
                    lineno + 1
                )));
            }
            total += 1;
            if parse_qualified(name).is_some() {
                qualified += 1;
            }
            class_names.push(name.to_string());
        }
        if class_names.is_empty() {
            return Err(Error::Label("mapping file has no entries".into()));
        }
        let mode = if qualified == total {
            LabelMode::Disjoint
        } else if qualified == 0 {
            LabelMode::Blurry
        } else {
            return Err(Error::Label(
                "mapping mixes task-qualified and raw class names".into(),
            ));
        };
        let mut lookup = BTreeMap::new();
        for (id, name) in class_names.iter().enumerate() {
            match mode {
                LabelMode::Disjoint => {
                    let (raw, task) = parse_qualified(name).unwrap();
                    lookup.insert((task, raw.to_string()), id);
                }
                LabelMode::Blurry => {
                    // Blurry lookups are per (task, name); tasks are not known
                    // here, so resolution goes through `resolve_blurry`.
                }
            }
        }
        Ok(Self { mode, lookup, class_names })
    }

    /// Registers a task's vocabulary after loading a blurry mapping file, so
    /// `resolve(task, name)` works for names present in the mapping.
    pub fn register_task_names(&mut self, task: usize, names: &[String]) -> Result<()> {
        for name in names {
            let id = match self.mode {
                LabelMode::Blurry => self
                    .class_names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| Error::Label(format!("action {name:?} missing from mapping")))?,
                LabelMode::Disjoint => {
                    let qualified = format!("{name}@t{task}");
                    self.class_names
                        .iter()
                        .position(|n| *n == qualified)
                        .ok_or_else(|| Error::Label(format!("class {qualified:?} missing from mapping")))?
                }
            };
            self.lookup.insert((task, name.clone()), id);
        }
        Ok(())
    }
}

fn parse_qualified(name: &str) -> Option<(&str, usize)> {
    let (raw, task) = name.rsplit_once("@t")?;
    task.parse::<usize>().ok().map(|t| (raw, t))
}

/// Reads a label file (one action name per line) into a labeling.
pub fn load_labels(path: &Path, space: &LabelSpace, task: usize) -> Result<SegmentLabeling> {
    let content = fs::read_to_string(path)?;
    let mut framewise = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        let name = line.trim();
        if name.is_empty() {
            return Err(Error::Label(format!(
                "{} line {}: blank label line",
                path.display(),
                lineno + 1
            )));
        }
        framewise.push(space.resolve(task, name).map_err(|e| {
            Error::Label(format!("{} line {}: {e}", path.display(), lineno + 1))
        })?);
    }
    if framewise.is_empty() {
        return Err(Error::Label(format!("{}: empty label file", path.display())));
    }
    SegmentLabeling::from_framewise(framewise)
}

/// Writes a labeling as one raw action name per frame line.
pub fn write_labels(path: &Path, labeling: &SegmentLabeling, space: &LabelSpace) -> Result<()> {
    let mut out = String::new();
    for &c in labeling.framewise() {
        out.push_str(space.raw_name(c));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

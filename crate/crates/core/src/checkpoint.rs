//! Versioned binary checkpoint container.
//!
//! Layout (all integers little-endian):
//! magic `ITCK`, u32 version, kind string, then three counted sections:
//! named u64 lists, named f64 scalars, and named tensors
//! (rows, cols, rows·cols weight f64s, bias length, bias f64s).
//! Values are stored as f64 bits, so `save(load(f))` is byte-identical.

use crate::error::{Error, Result};
use crate::numeric::{LayerParams, Matrix, Parameterized, RandomSource, Scalar};
use crate::seg::SegModel;
use crate::tca::TcaModel;
use std::fs;
use std::path::Path;

const MAGIC: &[u8; 4] = b"ITCK";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TensorEntry {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// In-memory checkpoint: ordered named sections.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub kind: String,
    pub int_lists: Vec<(String, Vec<u64>)>,
    pub scalars: Vec<(String, f64)>,
    pub tensors: Vec<(String, TensorEntry)>,
}

impl Checkpoint {
    pub fn int_list(&self, name: &str) -> Result<&[u64]> {
        self.int_lists
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::Format {
                path: Default::default(),
                offset: 0,
                msg: format!("checkpoint missing int list {name:?}"),
            })
    }

    pub fn scalar(&self, name: &str) -> Result<f64> {
        self.scalars
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::Format {
                path: Default::default(),
                offset: 0,
                msg: format!("checkpoint missing scalar {name:?}"),
            })
    }
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_bits().to_le_bytes());
    }
    fn string(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: std::path::PathBuf,
}

impl<'a> Reader<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Format { path: self.path.clone(), offset: self.pos as u64, msg: msg.into() }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(self.err(format!("truncated: wanted {n} bytes")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| self.err("invalid utf-8 string"))
    }
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let mut w = Writer { buf: Vec::new() };
    w.buf.extend_from_slice(MAGIC);
    w.u32(VERSION);
    w.string(&ckpt.kind);
    w.u32(ckpt.int_lists.len() as u32);
    for (name, list) in &ckpt.int_lists {
        w.string(name);
        w.u32(list.len() as u32);
        for &v in list {
            w.u64(v);
        }
    }
    w.u32(ckpt.scalars.len() as u32);
    for (name, v) in &ckpt.scalars {
        w.string(name);
        w.f64(*v);
    }
    w.u32(ckpt.tensors.len() as u32);
    for (name, t) in &ckpt.tensors {
        w.string(name);
        w.u32(t.rows as u32);
        w.u32(t.cols as u32);
        for &v in &t.weights {
            w.f64(v);
        }
        w.u32(t.bias.len() as u32);
        for &v in &t.bias {
            w.f64(v);
        }
    }
    fs::write(path, &w.buf)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path)?;
    let mut r = Reader { bytes: &bytes, pos: 0, path: path.to_path_buf() };
    if r.take(4)? != MAGIC {
        return Err(Error::Format { path: path.to_path_buf(), offset: 0, msg: "bad magic".into() });
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(r.err(format!("unsupported checkpoint version {version}")));
    }
    let kind = r.string()?;
    let mut int_lists = Vec::new();
    for _ in 0..r.u32()? {
        let name = r.string()?;
        let len = r.u32()? as usize;
        let mut list = Vec::with_capacity(len);
        for _ in 0..len {
            list.push(r.u64()?);
        }
        int_lists.push((name, list));
    }
    let mut scalars = Vec::new();
    for _ in 0..r.u32()? {
        let name = r.string()?;
        scalars.push((name, r.f64()?));
    }
    let mut tensors = Vec::new();
    for _ in 0..r.u32()? {
        let name = r.string()?;
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        let mut weights = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            weights.push(r.f64()?);
        }
        let bias_len = r.u32()? as usize;
        let mut bias = Vec::with_capacity(bias_len);
        for _ in 0..bias_len {
            bias.push(r.f64()?);
        }
        tensors.push((name, TensorEntry { rows, cols, weights, bias }));
    }
    if r.pos != bytes.len() {
        return Err(r.err("trailing bytes after checkpoint payload"));
    }
    Ok(Checkpoint { kind, int_lists, scalars, tensors })
}

fn tensors_of<T: Scalar, M: Parameterized<T>>(model: &M) -> Vec<(String, TensorEntry)> {
    model
        .params()
        .into_iter()
        .map(|(name, p)| {
            (
                name,
                TensorEntry {
                    rows: p.weights.rows(),
                    cols: p.weights.cols(),
                    weights: p.weights.data().iter().map(|v| v.to_f64().unwrap()).collect(),
                    bias: p.bias.iter().map(|v| v.to_f64().unwrap()).collect(),
                },
            )
        })
        .collect()
}

fn restore_params<T: Scalar, M: Parameterized<T>>(model: &mut M, ckpt: &Checkpoint) -> Result<()> {
    let params = model.params_mut();
    if params.len() != ckpt.tensors.len() {
        return Err(Error::Consistency(format!(
            "checkpoint has {} tensors, model expects {}",
            ckpt.tensors.len(),
            params.len()
        )));
    }
    for ((pname, p), (cname, t)) in params.into_iter().zip(&ckpt.tensors) {
        if pname != *cname || p.weights.rows() != t.rows || p.weights.cols() != t.cols
            || p.bias.len() != t.bias.len()
        {
            return Err(Error::Consistency(format!(
                "checkpoint tensor {cname:?} ({}x{}) does not match model block {pname:?}",
                t.rows, t.cols
            )));
        }
        for (slot, &v) in p.weights.data_mut().iter_mut().zip(&t.weights) {
            *slot = T::cast(v);
        }
        for (slot, &v) in p.bias.iter_mut().zip(&t.bias) {
            *slot = T::cast(v);
        }
        p.zero_grad();
    }
    Ok(())
}

/// Serializes a segmentation model (architecture + head classes + weights).
pub fn seg_to_checkpoint<T: Scalar>(model: &SegModel<T>) -> Checkpoint {
    Checkpoint {
        kind: "seg".into(),
        int_lists: vec![(
            "classes".into(),
            model.classes().iter().map(|&c| c as u64).collect(),
        )],
        scalars: vec![
            ("feature_dim".into(), model.feature_dim() as f64),
            ("channels".into(), model.channels() as f64),
            ("layers".into(), model.layers() as f64),
        ],
        tensors: tensors_of(model),
    }
}

pub fn seg_from_checkpoint<T: Scalar>(ckpt: &Checkpoint) -> Result<SegModel<T>> {
    if ckpt.kind != "seg" {
        return Err(Error::Consistency(format!("expected seg checkpoint, got {:?}", ckpt.kind)));
    }
    let classes: Vec<usize> = ckpt.int_list("classes")?.iter().map(|&v| v as usize).collect();
    let mut model = SegModel::new(
        ckpt.scalar("feature_dim")? as usize,
        ckpt.scalar("channels")? as usize,
        ckpt.scalar("layers")? as usize,
        classes,
        &mut RandomSource::new(0),
    )?;
    restore_params(&mut model, ckpt)?;
    Ok(model)
}

/// Serializes a TCA model (dimensions + weights).
pub fn tca_to_checkpoint<T: Scalar>(model: &TcaModel<T>) -> Checkpoint {
    Checkpoint {
        kind: "tca".into(),
        int_lists: Vec::new(),
        scalars: vec![
            ("feature_dim".into(), model.feature_dim() as f64),
            ("num_classes".into(), model.num_classes() as f64),
            ("latent_dim".into(), model.latent_dim() as f64),
            ("hidden_dim".into(), model.hidden_dim() as f64),
        ],
        tensors: tensors_of(model),
    }
}

pub fn tca_from_checkpoint<T: Scalar>(ckpt: &Checkpoint) -> Result<TcaModel<T>> {
    if ckpt.kind != "tca" {
        return Err(Error::Consistency(format!("expected tca checkpoint, got {:?}", ckpt.kind)));
    }
    let mut model = TcaModel::new(
        ckpt.scalar("feature_dim")? as usize,
        ckpt.scalar("num_classes")? as usize,
        ckpt.scalar("latent_dim")? as usize,
        ckpt.scalar("hidden_dim")? as usize,
        &mut RandomSource::new(0),
    );
    restore_params(&mut model, ckpt)?;
    Ok(model)
}

/// Convenience: matrix from a tensor entry's weights.
pub fn tensor_matrix<T: Scalar>(t: &TensorEntry) -> Result<Matrix<T>> {
    Matrix::from_vec(t.rows, t.cols, t.weights.iter().map(|&v| T::cast(v)).collect())
}

#[allow(unused)]
fn layer_dims<T: Scalar>(p: &LayerParams<T>) -> (usize, usize) {
    (p.in_dim(), p.out_dim())
}

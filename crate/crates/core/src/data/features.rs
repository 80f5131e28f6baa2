//! Frame-feature sequences and the FSEQ1 binary format.
//!
//! FSEQ1 layout: bytes 0–3 magic `FSQ1`, bytes 4–7 u32-LE frame count T,
//! bytes 8–11 u32-LE feature dim D, then T·D f32-LE values, frame-major.

use crate::error::{Error, Result};
use crate::numeric::{Matrix, Scalar};
use std::fs;
use std::io::Write;
use std::path::Path;

const MAGIC: &[u8; 4] = b"FSQ1";

/// A T×D frame-feature matrix with a source identifier.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence<T> {
    values: Matrix<T>,
    source_id: String,
}

impl<T: Scalar> FeatureSequence<T> {
    pub fn new(values: Matrix<T>, source_id: impl Into<String>) -> Result<Self> {
        if values.rows() == 0 || values.cols() == 0 {
            return Err(Error::Data(format!(
                "feature sequence must be at least 1x1, got {}x{}",
                values.rows(),
                values.cols()
            )));
        }
        if !values.all_finite() {
            return Err(Error::Numeric("feature sequence contains non-finite values".into()));
        }
        Ok(Self { values, source_id: source_id.into() })
    }

    /// Frame count T.
    pub fn frames(&self) -> usize {
        self.values.rows()
    }

    /// Feature dimension D.
    pub fn dim(&self) -> usize {
        self.values.cols()
    }

    pub fn values(&self) -> &Matrix<T> {
        &self.values
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn frame(&self, t: usize) -> &[T] {
        self.values.row(t)
    }
}

fn format_err(path: &Path, offset: u64, msg: impl Into<String>) -> Error {
    Error::Format { path: path.to_path_buf(), offset, msg: msg.into() }
}

/// Loads an FSEQ1 file. Values are widened from the stored f32.
pub fn load_features<T: Scalar>(path: &Path) -> Result<FeatureSequence<T>> {
    let bytes = fs::read(path)?;
    if bytes.len() < 12 {
        return Err(format_err(path, bytes.len() as u64, "truncated header"));
    }
    if &bytes[0..4] != MAGIC {
        return Err(format_err(path, 0, format!("bad magic {:?}", &bytes[0..4])));
    }
    let frames = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if frames == 0 || dim == 0 {
        return Err(format_err(path, 4, format!("degenerate shape {frames}x{dim}")));
    }
    let expected = 12 + frames * dim * 4;
    if bytes.len() != expected {
        return Err(format_err(
            path,
            bytes.len().min(expected) as u64,
            format!("payload is {} bytes, expected {}", bytes.len(), expected),
        ));
    }
    let mut data = Vec::with_capacity(frames * dim);
    for i in 0..frames * dim {
        let off = 12 + i * 4;
        let v = f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
        if !v.is_finite() {
            return Err(format_err(path, off as u64, format!("non-finite value {v}")));
        }
        data.push(T::cast(f64::from(v)));
    }
    let values = Matrix::from_vec(frames, dim, data)?;
    let source_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    FeatureSequence::new(values, source_id)
}

/// Writes an FSEQ1 file; values are narrowed to f32.
pub fn write_features<T: Scalar>(path: &Path, seq: &FeatureSequence<T>) -> Result<()> {
    let mut out = Vec::with_capacity(12 + seq.frames() * seq.dim() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(seq.frames() as u32).to_le_bytes());
    out.extend_from_slice(&(seq.dim() as u32).to_le_bytes());
    for &v in seq.values.data() {
        out.extend_from_slice(&(v.to_f64().unwrap() as f32).to_le_bytes());
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_payload_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.fseq");
        let m = Matrix::from_rows(&[vec![1.0f64, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let seq = FeatureSequence::new(m, "a").unwrap();
        write_features(&path, &seq).unwrap();
        let loaded: FeatureSequence<f64> = load_features(&path).unwrap();
        assert_eq!(loaded.frames(), 2);
        assert_eq!(loaded.dim(), 3);
        assert_eq!(loaded.values(), seq.values());
    }

    #[test]
    fn write_load_is_byte_involution() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.fseq");
        let path2 = dir.path().join("b2.fseq");
        let mut rng = crate::numeric::RandomSource::new(9);
        let mut m = Matrix::zeros(7, 5);
        for v in m.data_mut() {
            *v = rng.uniform_in(-10.0, 10.0);
        }
        write_features(&path, &FeatureSequence::new(m, "b").unwrap()).unwrap();
        let loaded: FeatureSequence<f64> = load_features(&path).unwrap();
        write_features(&path2, &loaded).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }

    #[test]
    fn corrupted_magic_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.fseq");
        fs::write(&path, b"XSQ1\x01\x00\x00\x00\x01\x00\x00\x00\x00\x00\x80\x3f").unwrap();
        let err = load_features::<f64>(&path).unwrap_err();
        match err {
            Error::Format { offset, .. } => assert_eq!(offset, 0),
            other => panic!("expected format error, got {other}"),
        }
    }

    #[test]
    fn truncated_payload_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.fseq");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&3u32.to_le_bytes());
        bytes.extend_from_slice(&1.0f32.to_le_bytes()); // 23 floats missing
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_features::<f64>(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn non_finite_value_is_format_error_with_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.fseq");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        bytes.extend_from_slice(&f32::NAN.to_le_bytes());
        fs::write(&path, &bytes).unwrap();
        match load_features::<f64>(&path) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 16),
            other => panic!("expected format error, got {other:?}"),
        }
    }
}

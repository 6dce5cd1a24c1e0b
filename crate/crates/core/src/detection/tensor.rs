//! Dense per-cell network output and its on-disk fixture format.
//!
//! Fixture layout: `"DTEN"`, `u32 S`, `u32 B`, `u32 C` (little-endian), then
//! `S*S*(B*5+C)` little-endian `f32` values, row-major by (row, col, channel).

use std::io::{Read, Write};
use std::path::Path;

use super::{DetectionError, GridConfig};

pub const TENSOR_MAGIC: [u8; 4] = *b"DTEN";
const HEADER_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionTensor {
    s: usize,
    b: usize,
    c: usize,
    values: Vec<f64>,
}

impl DetectionTensor {
    pub fn new(s: usize, b: usize, c: usize, values: Vec<f64>) -> Result<Self, DetectionError> {
        if s == 0 || b == 0 || c == 0 {
            return Err(DetectionError::Config(format!(
                "tensor dimensions must be positive (S={s}, B={b}, C={c})"
            )));
        }
        let expected = s * s * (b * 5 + c);
        if values.len() != expected {
            return Err(DetectionError::DimensionMismatch {
                expected,
                actual: values.len(),
            });
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || !(0.0..=1.0).contains(*v))
        {
            return Err(DetectionError::MalformedTensor(format!(
                "value {v} at index {i} is outside [0, 1]"
            )));
        }
        Ok(DetectionTensor { s, b, c, values })
    }

    pub fn zeros(cfg: &GridConfig) -> Self {
        DetectionTensor {
            s: cfg.s,
            b: cfg.b,
            c: cfg.c,
            values: vec![0.0; cfg.tensor_len()],
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.s, self.b, self.c)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn channels(&self) -> usize {
        self.b * 5 + self.c
    }

    pub fn matches(&self, cfg: &GridConfig) -> bool {
        self.dims() == (cfg.s, cfg.b, cfg.c)
    }

    fn offset(&self, row: usize, col: usize) -> usize {
        assert!(row < self.s && col < self.s, "cell ({row}, {col}) outside {0}x{0} grid", self.s);
        (row * self.s + col) * self.channels()
    }

    pub fn cell(&self, row: usize, col: usize) -> &[f64] {
        let o = self.offset(row, col);
        &self.values[o..o + self.channels()]
    }

    /// `[x, y, w, h, confidence]` for one box slot.
    pub fn box_slot(&self, row: usize, col: usize, slot: usize) -> &[f64] {
        assert!(slot < self.b);
        &self.cell(row, col)[slot * 5..slot * 5 + 5]
    }

    pub fn class_probs(&self, row: usize, col: usize) -> &[f64] {
        &self.cell(row, col)[self.b * 5..]
    }

    pub fn set_box_slot(
        &mut self,
        row: usize,
        col: usize,
        slot: usize,
        xywhc: [f64; 5],
    ) -> Result<(), DetectionError> {
        check_unit(&xywhc)?;
        assert!(slot < self.b);
        let o = self.offset(row, col) + slot * 5;
        self.values[o..o + 5].copy_from_slice(&xywhc);
        Ok(())
    }

    pub fn set_class_probs(
        &mut self,
        row: usize,
        col: usize,
        probs: &[f64],
    ) -> Result<(), DetectionError> {
        if probs.len() != self.c {
            return Err(DetectionError::DimensionMismatch {
                expected: self.c,
                actual: probs.len(),
            });
        }
        check_unit(probs)?;
        let o = self.offset(row, col) + self.b * 5;
        self.values[o..o + self.c].copy_from_slice(probs);
        Ok(())
    }

    pub fn clear_cell(&mut self, row: usize, col: usize) {
        let o = self.offset(row, col);
        let n = self.channels();
        self.values[o..o + n].fill(0.0);
    }

    pub fn is_cell_empty(&self, row: usize, col: usize) -> bool {
        self.cell(row, col).iter().all(|v| *v == 0.0)
    }

    pub fn write_fixture<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&TENSOR_MAGIC)?;
        for d in [self.s, self.b, self.c] {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&(*v as f32).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn to_fixture_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.values.len() * 4);
        self.write_fixture(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn from_fixture_bytes(bytes: &[u8]) -> Result<Self, DetectionError> {
        if bytes.len() < HEADER_LEN || bytes[..4] != TENSOR_MAGIC {
            return Err(DetectionError::MalformedTensor("missing DTEN header".into()));
        }
        let dim = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
        let (s, b, c) = (dim(0), dim(1), dim(2));
        let body = &bytes[HEADER_LEN..];
        let expected = s
            .checked_mul(s)
            .and_then(|n| n.checked_mul(b * 5 + c))
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| DetectionError::MalformedTensor("dimensions overflow".into()))?;
        if body.len() != expected {
            return Err(DetectionError::DimensionMismatch {
                expected: expected / 4,
                actual: body.len() / 4,
            });
        }
        let values = body
            .chunks_exact(4)
            .map(|ch| f32::from_le_bytes(ch.try_into().unwrap()) as f64)
            .collect();
        DetectionTensor::new(s, b, c, values)
    }

    pub fn read_fixture(path: &Path) -> Result<Self, DetectionError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| DetectionError::Backend(format!("{}: {e}", path.display())))?;
        Self::from_fixture_bytes(&bytes)
    }

    /// Sparse form listing only non-empty cells, split into chunks of at most
    /// `max_bytes` each. Every chunk is the fixture header with a cell count
    /// appended, then per cell a `u32` cell index and its channels as `f32`.
    pub fn to_sparse_chunks(&self, max_bytes: usize) -> Vec<Vec<u8>> {
        let record = 4 + 4 * self.channels();
        let per_chunk = (max_bytes.saturating_sub(HEADER_LEN + 4) / record).max(1);
        let occupied: Vec<usize> = (0..self.s * self.s)
            .filter(|&i| !self.is_cell_empty(i / self.s, i % self.s))
            .collect();
        let groups: Vec<&[usize]> = if occupied.is_empty() {
            vec![&[]]
        } else {
            occupied.chunks(per_chunk).collect()
        };
        groups
            .into_iter()
            .map(|cells| {
                let mut out = Vec::with_capacity(HEADER_LEN + 4 + cells.len() * record);
                out.extend_from_slice(&TENSOR_MAGIC);
                for d in [self.s, self.b, self.c, cells.len()] {
                    out.extend_from_slice(&(d as u32).to_le_bytes());
                }
                for &i in cells {
                    out.extend_from_slice(&(i as u32).to_le_bytes());
                    for v in self.cell(i / self.s, i % self.s) {
                        out.extend_from_slice(&(*v as f32).to_le_bytes());
                    }
                }
                out
            })
            .collect()
    }

    /// Reassembles a tensor from sparse chunks; all chunks must share dimensions.
    pub fn from_sparse_chunks<'a, I>(chunks: I) -> Result<Self, DetectionError>
    where
        I: IntoIterator<Item = &'a [u8]>,
    {
        let bad = |m: &str| DetectionError::MalformedTensor(m.to_string());
        let mut dims = None;
        let mut values: Vec<f64> = Vec::new();
        for bytes in chunks {
            if bytes.len() < HEADER_LEN + 4 || bytes[..4] != TENSOR_MAGIC {
                return Err(bad("missing sparse DTEN header"));
            }
            let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
            let (s, b, c, count) = (word(4), word(8), word(12), word(16));
            if s == 0 || b == 0 || c == 0 || s > 4096 || b > 4096 || c > 65536 {
                return Err(bad("implausible sparse tensor dimensions"));
            }
            match dims {
                None => {
                    dims = Some((s, b, c));
                    values = vec![0.0; s * s * (b * 5 + c)];
                }
                Some(d) if d != (s, b, c) => return Err(bad("sparse chunks disagree on dimensions")),
                Some(_) => {}
            }
            let channels = b * 5 + c;
            let record = 4 + 4 * channels;
            let body = &bytes[HEADER_LEN + 4..];
            if count.checked_mul(record) != Some(body.len()) {
                return Err(bad("sparse body length does not match cell count"));
            }
            for rec in body.chunks_exact(record) {
                let idx = u32::from_le_bytes(rec[..4].try_into().unwrap()) as usize;
                if idx >= s * s {
                    return Err(bad("sparse cell index out of range"));
                }
                for (k, ch) in rec[4..].chunks_exact(4).enumerate() {
                    values[idx * channels + k] = f32::from_le_bytes(ch.try_into().unwrap()) as f64;
                }
            }
        }
        let (s, b, c) = dims.ok_or_else(|| bad("no sparse chunks"))?;
        DetectionTensor::new(s, b, c, values)
    }
}

fn check_unit(vals: &[f64]) -> Result<(), DetectionError> {
    match vals.iter().find(|v| !v.is_finite() || !(0.0..=1.0).contains(*v)) {
        Some(v) => Err(DetectionError::MalformedTensor(format!("value {v} outside [0, 1]"))),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_header_layout() {
        let cfg = GridConfig::with_dims(2, 1, 2);
        let t = DetectionTensor::zeros(&cfg);
        let bytes = t.to_fixture_bytes();
        assert_eq!(&bytes[..4], b"DTEN");
        assert_eq!(&bytes[4..16], &[2, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0]);
        assert_eq!(bytes.len(), 16 + 2 * 2 * 7 * 4);
        assert_eq!(DetectionTensor::from_fixture_bytes(&bytes).unwrap(), t);
    }

    #[test]
    fn rejects_wrong_length_and_range() {
        assert!(matches!(
            DetectionTensor::new(2, 1, 1, vec![0.0; 5]),
            Err(DetectionError::DimensionMismatch { expected: 24, actual: 5 })
        ));
        let mut v = vec![0.0; 6];
        v[3] = 1.5;
        assert!(matches!(
            DetectionTensor::new(1, 1, 1, v),
            Err(DetectionError::MalformedTensor(_))
        ));
        let mut bytes = DetectionTensor::zeros(&GridConfig::with_dims(1, 1, 1)).to_fixture_bytes();
        bytes.pop();
        assert!(DetectionTensor::from_fixture_bytes(&bytes).is_err());
    }

    #[test]
    fn sparse_round_trip_keeps_f32_values() {
        let cfg = GridConfig::with_dims(3, 2, 4);
        let mut t = DetectionTensor::zeros(&cfg);
        t.set_box_slot(1, 2, 1, [0.25, 0.5, 0.125, 0.75, 1.0]).unwrap();
        t.set_class_probs(1, 2, &[0.0, 0.0, 1.0, 0.0]).unwrap();
        t.set_box_slot(0, 0, 0, [0.5, 0.5, 0.5, 0.5, 0.5]).unwrap();
        let chunks = t.to_sparse_chunks(1 << 16);
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].len(), 20 + 2 * (4 + 4 * 14));
        let back = DetectionTensor::from_sparse_chunks(chunks.iter().map(Vec::as_slice)).unwrap();
        assert_eq!(back, t);

        let small = t.to_sparse_chunks(100);
        assert_eq!(small.len(), 2);
        let back = DetectionTensor::from_sparse_chunks(small.iter().map(Vec::as_slice)).unwrap();
        assert_eq!(back, t);

        let empty = DetectionTensor::zeros(&cfg).to_sparse_chunks(1 << 16);
        let back = DetectionTensor::from_sparse_chunks(empty.iter().map(Vec::as_slice)).unwrap();
        assert_eq!(back, DetectionTensor::zeros(&cfg));
    }
}

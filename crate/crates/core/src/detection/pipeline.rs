use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    decode_grid, nms, score_candidates, DetectionError, DetectionTensor, GridConfig, LetterboxMap,
    PixelBox,
};
use crate::jpeg;

/// Seam for the object-detection network. Implementations must return a
/// tensor that satisfies the [`DetectionTensor`] invariants for `cfg`.
pub trait InferenceBackend {
    fn infer(&mut self, frame: &[u8], cfg: &GridConfig) -> Result<DetectionTensor, DetectionError>;
}

impl<B: InferenceBackend + ?Sized> InferenceBackend for Box<B> {
    fn infer(&mut self, frame: &[u8], cfg: &GridConfig) -> Result<DetectionTensor, DetectionError> {
        (**self).infer(frame, cfg)
    }
}

/// Reads the ground-truth tensor the simulator embeds in each JPEG as
/// sparse `DTEN` comment segments. Frames without one decode as empty.
#[derive(Debug, Default, Clone)]
pub struct OracleBackend;

impl InferenceBackend for OracleBackend {
    fn infer(&mut self, frame: &[u8], cfg: &GridConfig) -> Result<DetectionTensor, DetectionError> {
        let chunks: Vec<&[u8]> = jpeg::comments(frame)
            .into_iter()
            .filter(|c| c.starts_with(&super::tensor::TENSOR_MAGIC))
            .collect();
        if chunks.is_empty() {
            return Ok(DetectionTensor::zeros(cfg));
        }
        DetectionTensor::from_sparse_chunks(chunks)
    }
}

/// Replays tensors from `DTEN` fixture files, cycling through them one per frame.
#[derive(Debug, Clone)]
pub struct FixtureBackend {
    tensors: Vec<DetectionTensor>,
    next: usize,
}

impl FixtureBackend {
    pub fn new(tensors: Vec<DetectionTensor>) -> Result<Self, DetectionError> {
        if tensors.is_empty() {
            return Err(DetectionError::Backend("fixture backend needs at least one tensor".into()));
        }
        Ok(FixtureBackend { tensors, next: 0 })
    }

    /// Loads one file, or every `*.dten` file in a directory in name order.
    pub fn load(path: &Path) -> Result<Self, DetectionError> {
        let files: Vec<PathBuf> = if path.is_dir() {
            let mut v: Vec<PathBuf> = std::fs::read_dir(path)
                .map_err(|e| DetectionError::Backend(format!("{}: {e}", path.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "dten"))
                .collect();
            v.sort();
            v
        } else {
            vec![path.to_path_buf()]
        };
        let tensors = files
            .iter()
            .map(|p| DetectionTensor::read_fixture(p))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(tensors)
    }
}

impl InferenceBackend for FixtureBackend {
    fn infer(&mut self, _frame: &[u8], _cfg: &GridConfig) -> Result<DetectionTensor, DetectionError> {
        let t = self.tensors[self.next].clone();
        self.next = (self.next + 1) % self.tensors.len();
        Ok(t)
    }
}

/// A detection mapped back to source-image pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelDetection {
    pub class_id: usize,
    #[serde(rename = "class")]
    pub class_name: String,
    pub score: f64,
    #[serde(rename = "box")]
    pub bbox: PixelBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSet {
    pub timestamp_ms: u64,
    pub items: Vec<PixelDetection>,
}

impl DetectionSet {
    pub fn empty(timestamp_ms: u64) -> Self {
        DetectionSet {
            timestamp_ms,
            items: Vec::new(),
        }
    }

    pub fn class_names(&self) -> Vec<&str> {
        self.items.iter().map(|d| d.class_name.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("pipeline failed for frame {timestamp_ms}: {source}")]
pub struct PipelineError {
    pub timestamp_ms: u64,
    #[source]
    pub source: DetectionError,
}

/// infer, decode, score, suppress, then map to source pixels, keeping score order.
pub fn run_pipeline(
    frame: &[u8],
    timestamp_ms: u64,
    backend: &mut dyn InferenceBackend,
    cfg: &GridConfig,
    map: &LetterboxMap,
) -> Result<DetectionSet, PipelineError> {
    let fail = |source| PipelineError {
        timestamp_ms,
        source,
    };
    let tensor = backend.infer(frame, cfg).map_err(fail)?;
    let (s, b, c) = tensor.dims();
    // Re-check invariants: backends are not trusted to construct tensors via `new`.
    let tensor = DetectionTensor::new(s, b, c, tensor.values().to_vec()).map_err(fail)?;
    let candidates = decode_grid(&tensor, cfg).map_err(fail)?;
    let scored = score_candidates(&candidates, cfg);
    let kept = nms(&scored, cfg.nms_iou_threshold);
    Ok(DetectionSet {
        timestamp_ms,
        items: kept
            .into_iter()
            .map(|d| PixelDetection {
                class_id: d.class_id,
                class_name: d.class_name,
                score: d.score,
                bbox: map.to_image(&d.bbox),
            })
            .collect(),
    })
}

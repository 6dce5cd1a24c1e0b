//! Grid-tensor post-processing: decode, class-specific scoring, NMS and
//! letterbox inversion, plus the inference backend seam.

mod config;
mod decode;
mod letterbox;
mod nms;
mod pipeline;
pub mod tensor;

pub use config::{GridConfig, COCO_CLASSES};
pub use decode::{decode_grid, score_candidates, Candidate, CellRef, Detection};
pub use letterbox::{letterbox_to_image, LetterboxMap, PixelBox};
pub use nms::nms;
pub use pipeline::{
    run_pipeline, DetectionSet, FixtureBackend, InferenceBackend, OracleBackend, PipelineError,
    PixelDetection,
};
pub use tensor::DetectionTensor;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectionError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("tensor length mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("malformed tensor: {0}")]
    MalformedTensor(String),
    #[error("inference backend failed: {0}")]
    Backend(String),
}

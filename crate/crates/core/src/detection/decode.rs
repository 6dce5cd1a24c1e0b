use serde::{Deserialize, Serialize};

use super::{DetectionError, DetectionTensor, GridConfig};
use crate::geometry::{BBox, CenterBox};

/// Grid position a candidate was decoded from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellRef {
    pub row: usize,
    pub col: usize,
    pub slot: usize,
}

/// One decoded box slot before scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub center: CenterBox,
    pub confidence: f64,
    pub class_probs: Vec<f64>,
    pub source: CellRef,
}

/// A scored detection in normalized network-input coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub class_id: usize,
    pub class_name: String,
    pub score: f64,
    pub source: CellRef,
}

/// Emits every `S*S*B` box slot. Centres are cell-relative in the tensor and
/// become image-relative here; width and height pass through unchanged.
pub fn decode_grid(
    tensor: &DetectionTensor,
    cfg: &GridConfig,
) -> Result<Vec<Candidate>, DetectionError> {
    if !tensor.matches(cfg) {
        let (s, b, c) = tensor.dims();
        return Err(DetectionError::Config(format!(
            "tensor is S={s}, B={b}, C={c} but config expects S={}, B={}, C={}",
            cfg.s, cfg.b, cfg.c
        )));
    }
    let s = cfg.s as f64;
    let mut out = Vec::with_capacity(cfg.s * cfg.s * cfg.b);
    for row in 0..cfg.s {
        for col in 0..cfg.s {
            let probs = tensor.class_probs(row, col);
            for slot in 0..cfg.b {
                let [x, y, w, h, confidence]: [f64; 5] =
                    tensor.box_slot(row, col, slot).try_into().unwrap();
                out.push(Candidate {
                    center: CenterBox {
                        cx: (col as f64 + x) / s,
                        cy: (row as f64 + y) / s,
                        w,
                        h,
                    },
                    confidence,
                    class_probs: probs.to_vec(),
                    source: CellRef { row, col, slot },
                });
            }
        }
    }
    Ok(out)
}

/// Class-specific confidence: box confidence times the argmax class
/// probability. Ties go to the lower class id. Scores below the threshold are dropped.
pub fn score_candidates(candidates: &[Candidate], cfg: &GridConfig) -> Vec<Detection> {
    candidates
        .iter()
        .filter_map(|cand| {
            let (class_id, prob) = cand
                .class_probs
                .iter()
                .copied()
                .enumerate()
                .fold((0usize, f64::NEG_INFINITY), |best, (i, p)| {
                    if p > best.1 {
                        (i, p)
                    } else {
                        best
                    }
                });
            let score = cand.confidence * prob;
            (score >= cfg.score_threshold).then(|| Detection {
                bbox: cand.center.to_corners(),
                class_id,
                class_name: cfg
                    .class_names
                    .get(class_id)
                    .cloned()
                    .unwrap_or_else(|| format!("class{class_id}")),
                score,
                source: cand.source,
            })
        })
        .collect()
}

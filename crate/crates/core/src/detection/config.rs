use serde::{Deserialize, Serialize};

use super::DetectionError;

/// The 80 COCO class labels in canonical index order.
pub const COCO_CLASSES: [&str; 80] = [
    "person", "bicycle", "car", "motorcycle", "airplane", "bus", "train", "truck", "boat",
    "traffic light", "fire hydrant", "stop sign", "parking meter", "bench", "bird", "cat", "dog",
    "horse", "sheep", "cow", "elephant", "bear", "zebra", "giraffe", "backpack", "umbrella",
    "handbag", "tie", "suitcase", "frisbee", "skis", "snowboard", "sports ball", "kite",
    "baseball bat", "baseball glove", "skateboard", "surfboard", "tennis racket", "bottle",
    "wine glass", "cup", "fork", "knife", "spoon", "bowl", "banana", "apple", "sandwich", "orange",
    "broccoli", "carrot", "hot dog", "pizza", "donut", "cake", "chair", "couch", "potted plant",
    "bed", "dining table", "toilet", "tv", "laptop", "mouse", "remote", "keyboard", "cell phone",
    "microwave", "oven", "toaster", "sink", "refrigerator", "book", "clock", "vase", "scissors",
    "teddy bear", "hair drier", "toothbrush",
];

/// Grid layout and post-processing thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// Grid side count.
    pub s: usize,
    /// Boxes predicted per cell.
    pub b: usize,
    /// Number of classes.
    pub c: usize,
    pub class_names: Vec<String>,
    pub score_threshold: f64,
    pub nms_iou_threshold: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            s: 13,
            b: 3,
            c: COCO_CLASSES.len(),
            class_names: COCO_CLASSES.iter().map(|s| s.to_string()).collect(),
            score_threshold: 0.5,
            nms_iou_threshold: 0.45,
        }
    }
}

impl GridConfig {
    /// Builds a config with generated class names `class0..classN` and default thresholds.
    pub fn with_dims(s: usize, b: usize, c: usize) -> Self {
        let class_names = if c == COCO_CLASSES.len() {
            COCO_CLASSES.iter().map(|s| s.to_string()).collect()
        } else {
            (0..c).map(|i| format!("class{i}")).collect()
        };
        GridConfig {
            s,
            b,
            c,
            class_names,
            ..GridConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), DetectionError> {
        if self.s == 0 || self.b == 0 || self.c == 0 {
            return Err(DetectionError::Config(format!(
                "grid dimensions must be positive (S={}, B={}, C={})",
                self.s, self.b, self.c
            )));
        }
        if self.class_names.len() != self.c {
            return Err(DetectionError::Config(format!(
                "expected {} class names, got {}",
                self.c,
                self.class_names.len()
            )));
        }
        for (name, t) in [
            ("score_threshold", self.score_threshold),
            ("nms_iou_threshold", self.nms_iou_threshold),
        ] {
            if !(0.0..=1.0).contains(&t) {
                return Err(DetectionError::Config(format!("{name} {t} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Channels per cell: B blocks of (x, y, w, h, confidence) then C class probabilities.
    pub fn channels(&self) -> usize {
        self.b * 5 + self.c
    }

    pub fn tensor_len(&self) -> usize {
        self.s * self.s * self.channels()
    }

    pub fn class_id(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|n| n == name)
    }
}

//! Axis-aligned box geometry in normalized image coordinates.
//!
//! All coordinates are dimensionless in `[0, 1]` with the origin at the
//! top-left corner of the image. Corner form ([`BBox`]) is the interchange
//! form; centre form ([`CenterBox`]) only exists between grid decoding and
//! conversion.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("box coordinates must be finite")]
    NonFinite,
    #[error("box corners out of order: ({x_min}, {y_min}) .. ({x_max}, {y_max})")]
    Inverted {
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
    },
    #[error("box extent must be non-negative (w={w}, h={h})")]
    NegativeExtent { w: f64, h: f64 },
}

/// Corner-form box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, GeometryError> {
        let b = BBox {
            x_min,
            y_min,
            x_max,
            y_max,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let all = [self.x_min, self.y_min, self.x_max, self.y_max];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if self.x_min > self.x_max || self.y_min > self.y_max {
            return Err(GeometryError::Inverted {
                x_min: self.x_min,
                y_min: self.y_min,
                x_max: self.x_max,
                y_max: self.y_max,
            });
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    /// Overlap region, or `None` when the boxes do not touch.
    pub fn intersection(&self, other: &BBox) -> Option<BBox> {
        let x_min = self.x_min.max(other.x_min);
        let y_min = self.y_min.max(other.y_min);
        let x_max = self.x_max.min(other.x_max);
        let y_max = self.y_max.min(other.y_max);
        (x_min <= x_max && y_min <= y_max).then_some(BBox {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        iou(self, other)
    }

    pub fn to_center(&self) -> CenterBox {
        CenterBox {
            cx: (self.x_min + self.x_max) / 2.0,
            cy: (self.y_min + self.y_max) / 2.0,
            w: self.width(),
            h: self.height(),
        }
    }
}

/// Centre-form box: centre point plus width and height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenterBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl CenterBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self, GeometryError> {
        if ![cx, cy, w, h].iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if w < 0.0 || h < 0.0 {
            return Err(GeometryError::NegativeExtent { w, h });
        }
        Ok(CenterBox { cx, cy, w, h })
    }

    pub fn to_corners(&self) -> BBox {
        center_to_corners(self)
    }
}

/// Intersection over union. Zero-area unions yield 0.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection(b).map_or(0.0, |i| i.area());
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Converts centre form to corner form, clamping every coordinate into `[0, 1]`.
pub fn center_to_corners(c: &CenterBox) -> BBox {
    let half_w = c.w / 2.0;
    let half_h = c.h / 2.0;
    BBox {
        x_min: (c.cx - half_w).clamp(0.0, 1.0),
        y_min: (c.cy - half_h).clamp(0.0, 1.0),
        x_max: (c.cx + half_w).clamp(0.0, 1.0),
        y_max: (c.cy + half_h).clamp(0.0, 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bbox(x0: f64, y0: f64, x1: f64, y1: f64) -> BBox {
        BBox::new(x0, y0, x1, y1).unwrap()
    }

    /// Counts cells of a 0.001 grid whose centres fall inside each box.
    fn raster_iou(a: &BBox, b: &BBox) -> f64 {
        let inside = |bx: &BBox, x: f64, y: f64| {
            x >= bx.x_min && x < bx.x_max && y >= bx.y_min && y < bx.y_max
        };
        let (mut inter, mut union) = (0u64, 0u64);
        for i in 0..1000 {
            let x = (i as f64 + 0.5) / 1000.0;
            for j in 0..1000 {
                let y = (j as f64 + 0.5) / 1000.0;
                let (ia, ib) = (inside(a, x, y), inside(b, x, y));
                if ia && ib {
                    inter += 1;
                }
                if ia || ib {
                    union += 1;
                }
            }
        }
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    #[test]
    fn iou_identity_and_disjoint() {
        let a = bbox(0.1, 0.1, 0.5, 0.5);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&bbox(0.0, 0.0, 0.2, 0.2), &bbox(0.5, 0.5, 0.9, 0.9)), 0.0);
    }

    #[test]
    fn iou_partial_overlap_matches_raster() {
        let a = bbox(0.0, 0.0, 0.2, 0.2);
        let b = bbox(0.1, 0.0, 0.3, 0.2);
        let oracle = raster_iou(&a, &b);
        assert!((oracle - 1.0 / 3.0).abs() < 1e-3, "oracle {oracle}");
        assert!((iou(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_union_is_zero() {
        let p = bbox(0.3, 0.3, 0.3, 0.3);
        assert_eq!(iou(&p, &p), 0.0);
        let line = bbox(0.1, 0.2, 0.1, 0.6);
        assert_eq!(iou(&line, &p), 0.0);
    }

    #[test]
    fn center_conversion_examples() {
        let full = center_to_corners(&CenterBox::new(0.5, 0.5, 1.0, 1.0).unwrap());
        assert_eq!(full, bbox(0.0, 0.0, 1.0, 1.0));
        let point = center_to_corners(&CenterBox::new(0.5, 0.5, 0.0, 0.0).unwrap());
        assert_eq!(point, bbox(0.5, 0.5, 0.5, 0.5));
        let clamped = center_to_corners(&CenterBox::new(0.1, 0.5, 0.4, 0.2).unwrap());
        assert!(clamped.x_min == 0.0);
        assert!((clamped.y_min - 0.4).abs() < 1e-12);
        assert!((clamped.x_max - 0.3).abs() < 1e-12);
        assert!((clamped.y_max - 0.6).abs() < 1e-12);
    }

    #[test]
    fn constructors_reject_bad_input() {
        assert!(BBox::new(0.5, 0.0, 0.4, 1.0).is_err());
        assert!(BBox::new(f64::NAN, 0.0, 0.4, 1.0).is_err());
        assert!(CenterBox::new(0.5, 0.5, -0.1, 0.2).is_err());
        assert!(CenterBox::new(0.5, f64::INFINITY, 0.1, 0.2).is_err());
    }

    fn grid_box() -> impl Strategy<Value = BBox> {
        (0u32..=1000, 0u32..=1000, 0u32..=1000, 0u32..=1000).prop_map(|(a, b, c, d)| {
            let (x0, x1) = (a.min(b) as f64 / 1000.0, a.max(b) as f64 / 1000.0);
            let (y0, y1) = (c.min(d) as f64 / 1000.0, c.max(d) as f64 / 1000.0);
            BBox::new(x0, y0, x1, y1).unwrap()
        })
    }

    proptest! {
        #[test]
        fn iou_symmetric_and_bounded(a in grid_box(), b in grid_box()) {
            let ab = iou(&a, &b);
            prop_assert_eq!(ab, iou(&b, &a));
            prop_assert!((0.0..=1.0).contains(&ab));
            if a.area() > 0.0 {
                prop_assert!((iou(&a, &a) - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn center_to_corners_is_valid(cx in -1.0f64..2.0, cy in -1.0f64..2.0, w in 0.0f64..3.0, h in 0.0f64..3.0) {
            let b = center_to_corners(&CenterBox::new(cx, cy, w, h).unwrap());
            prop_assert!(b.validate().is_ok());
            for v in [b.x_min, b.y_min, b.x_max, b.y_max] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn iou_agrees_with_raster(a in grid_box(), b in grid_box()) {
            prop_assert!((iou(&a, &b) - raster_iou(&a, &b)).abs() < 2e-3);
        }
    }
}

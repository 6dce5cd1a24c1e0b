use serde::{Deserialize, Serialize};

use super::DetectionError;
use crate::geometry::BBox;

/// Aspect-preserving fit of a source frame into the network input, centred
/// with symmetric padding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LetterboxMap {
    pub src_w: u32,
    pub src_h: u32,
    pub net_w: u32,
    pub net_h: u32,
    pub scale: f64,
    pub pad_x: f64,
    pub pad_y: f64,
}

/// Box in source-image pixels. Serializes as `[x0, y0, x1, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[u32; 4]", into = "[u32; 4]")]
pub struct PixelBox {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl PixelBox {
    pub fn to_array(self) -> [u32; 4] {
        [self.x0, self.y0, self.x1, self.y1]
    }
}

impl From<[u32; 4]> for PixelBox {
    fn from([x0, y0, x1, y1]: [u32; 4]) -> Self {
        PixelBox { x0, y0, x1, y1 }
    }
}

impl From<PixelBox> for [u32; 4] {
    fn from(p: PixelBox) -> Self {
        p.to_array()
    }
}

impl LetterboxMap {
    pub fn new(src_w: u32, src_h: u32, net_w: u32, net_h: u32) -> Result<Self, DetectionError> {
        if src_w == 0 || src_h == 0 || net_w == 0 || net_h == 0 {
            return Err(DetectionError::Config(format!(
                "letterbox sizes must be positive ({src_w}x{src_h} -> {net_w}x{net_h})"
            )));
        }
        let scale = (net_w as f64 / src_w as f64).min(net_h as f64 / src_h as f64);
        let pad_x = ((net_w as f64 - src_w as f64 * scale) / 2.0).max(0.0);
        let pad_y = ((net_h as f64 - src_h as f64 * scale) / 2.0).max(0.0);
        Ok(LetterboxMap {
            src_w,
            src_h,
            net_w,
            net_h,
            scale,
            pad_x,
            pad_y,
        })
    }

    pub fn identity(w: u32, h: u32) -> Self {
        LetterboxMap::new(w, h, w, h).expect("identity map requires positive size")
    }

    fn to_src_x(&self, x: f64) -> u32 {
        let px = ((x * self.net_w as f64 - self.pad_x) / self.scale).round();
        px.clamp(0.0, self.src_w as f64) as u32
    }

    fn to_src_y(&self, y: f64) -> u32 {
        let py = ((y * self.net_h as f64 - self.pad_y) / self.scale).round();
        py.clamp(0.0, self.src_h as f64) as u32
    }

    /// Normalized network coordinates to clamped source pixels.
    pub fn to_image(&self, b: &BBox) -> PixelBox {
        PixelBox {
            x0: self.to_src_x(b.x_min),
            y0: self.to_src_y(b.y_min),
            x1: self.to_src_x(b.x_max),
            y1: self.to_src_y(b.y_max),
        }
    }

    /// Source pixel coordinates (sub-pixel allowed) to normalized network coordinates.
    pub fn to_network(&self, x0: f64, y0: f64, x1: f64, y1: f64) -> BBox {
        let nx = |x: f64| (x * self.scale + self.pad_x) / self.net_w as f64;
        let ny = |y: f64| (y * self.scale + self.pad_y) / self.net_h as f64;
        BBox {
            x_min: nx(x0),
            y_min: ny(y0),
            x_max: nx(x1),
            y_max: ny(y1),
        }
    }
}

pub fn letterbox_to_image(b: &BBox, m: &LetterboxMap) -> PixelBox {
    m.to_image(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_full_box() {
        let m = LetterboxMap::identity(416, 416);
        let b = BBox { x_min: 0.0, y_min: 0.0, x_max: 1.0, y_max: 1.0 };
        assert_eq!(m.to_image(&b), PixelBox { x0: 0, y0: 0, x1: 416, y1: 416 });
    }

    #[test]
    fn wide_source_into_square_network() {
        let m = LetterboxMap::new(640, 360, 416, 416).unwrap();
        assert!((m.scale - 0.65).abs() < 1e-12);
        assert_eq!(m.pad_x, 0.0);
        assert!((m.pad_y - 91.0).abs() < 1e-9);
        let b = BBox { x_min: 0.25, y_min: 0.5, x_max: 0.75, y_max: 0.75 };
        assert_eq!(letterbox_to_image(&b, &m), PixelBox { x0: 160, y0: 180, x1: 480, y1: 340 });
    }

    #[test]
    fn point_box_stays_a_point() {
        let m = LetterboxMap::new(640, 360, 416, 416).unwrap();
        let b = BBox { x_min: 0.4, y_min: 0.4, x_max: 0.4, y_max: 0.4 };
        let p = m.to_image(&b);
        assert_eq!((p.x0, p.y0), (p.x1, p.y1));
    }

    #[test]
    fn rejects_zero_sizes() {
        assert!(LetterboxMap::new(0, 10, 416, 416).is_err());
    }

    proptest! {
        #[test]
        fn forward_then_inverse_is_identity(
            src_w in 16u32..2000, src_h in 16u32..2000, net in 32u32..1024,
            fx0 in 0.05f64..0.45, fy0 in 0.05f64..0.45, fx1 in 0.55f64..0.95, fy1 in 0.55f64..0.95,
        ) {
            let m = LetterboxMap::new(src_w, src_h, net, net).unwrap();
            let (x0, y0) = (fx0 * src_w as f64, fy0 * src_h as f64);
            let (x1, y1) = (fx1 * src_w as f64, fy1 * src_h as f64);
            let p = m.to_image(&m.to_network(x0, y0, x1, y1));
            for (got, want) in [(p.x0, x0), (p.y0, y0), (p.x1, x1), (p.y1, y1)] {
                prop_assert!((got as f64 - want).abs() <= 1.0, "{got} vs {want}");
            }
        }
    }
}

use std::collections::BTreeMap;
use std::f64::consts::PI;

use image::codecs::jpeg::JpegEncoder;
use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use super::{SimError, World};
use crate::agent::DepthProfile;
use crate::detection::{DetectionTensor, GridConfig, LetterboxMap};
use crate::jpeg;

const NEAR_PLANE_M: f64 = 0.01;
const JPEG_QUALITY: u8 = 80;
const BACKGROUND: Rgb<u8> = Rgb([200, 200, 190]);

/// Pinhole camera at the robot center, looking along its heading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimCamera {
    /// radians
    pub hfov: f64,
    pub width: u32,
    pub height: u32,
    /// Square network input the frame is letterboxed into.
    pub net_size: u32,
    pub max_range: f64,
    pub mount_height: f64,
    /// All obstacles are extruded to this height.
    pub object_height: f64,
}

impl Default for SimCamera {
    fn default() -> Self {
        SimCamera {
            hfov: PI / 3.0,
            width: 640,
            height: 360,
            net_size: 416,
            max_range: 6.0,
            mount_height: 0.3,
            object_height: 0.6,
        }
    }
}

impl SimCamera {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Camera(m));
        if !(self.hfov > 0.0 && self.hfov < PI) {
            return bad(format!("hfov {} must be in (0, pi)", self.hfov));
        }
        if self.width == 0 || self.height == 0 || self.net_size == 0 {
            return bad("image and network sizes must be positive".into());
        }
        if !(self.max_range > 0.0) || !(self.object_height > 0.0) || !(self.mount_height >= 0.0) {
            return bad("ranges and heights must be positive".into());
        }
        Ok(())
    }

    pub fn focal_px(&self) -> f64 {
        self.width as f64 / 2.0 / (self.hfov / 2.0).tan()
    }

    pub fn letterbox(&self) -> LetterboxMap {
        LetterboxMap::new(self.width, self.height, self.net_size, self.net_size)
            .expect("validated camera has positive sizes")
    }
}

/// An obstacle's image-plane footprint.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub obstacle: usize,
    /// Forward distance to the nearest visible point.
    pub depth: f64,
    /// Sub-pixel `[x0, y0, x1, y1]`, clamped to the image.
    pub pixels: [f64; 4],
}

/// Projects every obstacle that is in front of the camera, inside
/// `max_range` and overlapping the image.
pub fn project_obstacles(w: &World, cam: &SimCamera) -> Vec<Projection> {
    let (sin, cos) = w.robot.theta.sin_cos();
    let f = cam.focal_px();
    let (cx, cy) = (cam.width as f64 / 2.0, cam.height as f64 / 2.0);
    let mut out = Vec::new();
    for (i, o) in w.obstacles.iter().enumerate() {
        // Robot frame: x forward, y left.
        let local: Vec<(f64, f64)> = o
            .rect
            .corners()
            .iter()
            .map(|&(x, y)| {
                let (dx, dy) = (x - w.robot.x, y - w.robot.y);
                (cos * dx + sin * dy, -sin * dx + cos * dy)
            })
            .collect();
        let clipped = clip_front(&local, NEAR_PLANE_M);
        if clipped.is_empty() {
            continue;
        }
        let depth = clipped.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        if depth > cam.max_range {
            continue;
        }
        let us = clipped.iter().map(|&(x, y)| cx - f * y / x);
        let (u0, u1) = us.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), u| (lo.min(u), hi.max(u)));
        let v0 = cy - f * (cam.object_height - cam.mount_height) / depth;
        let v1 = cy + f * cam.mount_height / depth;
        let (w_px, h_px) = (cam.width as f64, cam.height as f64);
        let px = [u0.clamp(0.0, w_px), v0.clamp(0.0, h_px), u1.clamp(0.0, w_px), v1.clamp(0.0, h_px)];
        if px[2] > px[0] && px[3] > px[1] {
            out.push(Projection { obstacle: i, depth, pixels: px });
        }
    }
    out
}

/// Sutherland-Hodgman against the half-plane `x >= near`.
fn clip_front(poly: &[(f64, f64)], near: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    for k in 0..poly.len() {
        let a = poly[k];
        let b = poly[(k + 1) % poly.len()];
        let (ina, inb) = (a.0 >= near, b.0 >= near);
        if ina {
            out.push(a);
        }
        if ina != inb {
            let t = (near - a.0) / (b.0 - a.0);
            out.push((near, a.1 + t * (b.1 - a.1)));
        }
    }
    out
}

/// Ground-truth tensor: each visible, detectable obstacle goes in box slot 0
/// of the cell holding its center, with confidence 1 and a one-hot class.
pub fn render_tensor(w: &World, cam: &SimCamera, cfg: &GridConfig) -> DetectionTensor {
    let map = cam.letterbox();
    let s = cfg.s;
    let mut cells: BTreeMap<(usize, usize), (f64, usize, [f64; 5])> = BTreeMap::new();
    for p in project_obstacles(w, cam) {
        let Some(class) = cfg.class_id(&w.obstacles[p.obstacle].label) else {
            continue;
        };
        let c = map.to_network(p.pixels[0], p.pixels[1], p.pixels[2], p.pixels[3]).to_center();
        let col = ((c.cx * s as f64).floor() as usize).min(s - 1);
        let row = ((c.cy * s as f64).floor() as usize).min(s - 1);
        let slot = [
            (c.cx * s as f64 - col as f64).clamp(0.0, 1.0),
            (c.cy * s as f64 - row as f64).clamp(0.0, 1.0),
            c.w.clamp(0.0, 1.0),
            c.h.clamp(0.0, 1.0),
            1.0,
        ];
        match cells.get(&(row, col)) {
            Some((d, _, _)) if *d <= p.depth => {}
            _ => {
                cells.insert((row, col), (p.depth, class, slot));
            }
        }
    }
    let mut t = DetectionTensor::zeros(cfg);
    for ((row, col), (_, class, slot)) in cells {
        let mut probs = vec![0.0; cfg.c];
        probs[class] = 1.0;
        t.set_box_slot(row, col, 0, slot).expect("slot values are clamped to [0, 1]");
        t.set_class_probs(row, col, &probs).expect("one-hot has C entries");
    }
    t
}

/// Ray bearings in radians relative to the heading, left to right.
pub fn ray_bearings(n: usize, hfov: f64) -> Vec<f64> {
    if n <= 1 {
        return vec![0.0];
    }
    let step = hfov / (n - 1) as f64;
    (0..n)
        .map(|k| {
            // Mirror around the middle so the central ray is exactly 0.
            let m = k as f64 - (n - 1) as f64 / 2.0;
            -m * step
        })
        .collect()
}

/// Depth fan from the robot center; misses and returns beyond `max_range` are `+inf`.
pub fn raycast_depth(w: &World, n: usize, cam: &SimCamera) -> DepthProfile {
    let samples = ray_bearings(n, cam.hfov)
        .into_iter()
        .map(|b| {
            let (dy, dx) = (w.robot.theta + b).sin_cos();
            let d = w
                .obstacles
                .iter()
                .filter_map(|o| o.rect.ray_hit(w.robot.x, w.robot.y, dx, dy))
                .fold(f64::INFINITY, f64::min);
            if d > cam.max_range || d <= 0.0 {
                f64::INFINITY
            } else {
                d
            }
        })
        .collect();
    DepthProfile::new(samples, cam.hfov).expect("samples are positive")
}

fn class_color(label: &str) -> Rgb<u8> {
    // FNV-1a; stable across runs and platforms.
    let h = label
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3));
    Rgb([40 + (h & 0x9f) as u8, 40 + ((h >> 8) & 0x9f) as u8, 40 + ((h >> 16) & 0x9f) as u8])
}

/// Schematic top-down view of the world bounds.
pub fn render_jpeg(w: &World, cam: &SimCamera) -> Vec<u8> {
    let (iw, ih) = (cam.width, cam.height);
    let mut img = RgbImage::from_pixel(iw, ih, BACKGROUND);
    let b = &w.bounds;
    let sx = iw as f64 / (b.x1 - b.x0);
    let sy = ih as f64 / (b.y1 - b.y0);
    for o in &w.obstacles {
        let r = &o.rect;
        let px0 = ((r.x0 - b.x0) * sx).floor().clamp(0.0, iw as f64) as u32;
        let px1 = ((r.x1 - b.x0) * sx).ceil().clamp(0.0, iw as f64) as u32;
        // World +y is up in the image.
        let py0 = ((b.y1 - r.y1) * sy).floor().clamp(0.0, ih as f64) as u32;
        let py1 = ((b.y1 - r.y0) * sy).ceil().clamp(0.0, ih as f64) as u32;
        let color = class_color(&o.label);
        for y in py0..py1 {
            for x in px0..px1 {
                img.put_pixel(x, y, color);
            }
        }
    }
    let mut buf = Vec::new();
    JpegEncoder::new_with_quality(&mut buf, JPEG_QUALITY)
        .encode_image(&img)
        .expect("encoding to memory cannot fail");
    buf
}

/// [`render_jpeg`] with the ground-truth tensor embedded for the oracle backend.
pub fn render_frame(w: &World, cam: &SimCamera, cfg: &GridConfig) -> Vec<u8> {
    let chunks = render_tensor(w, cam, cfg).to_sparse_chunks(60_000);
    jpeg::insert_comments(&render_jpeg(w, cam), &chunks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::{decode_grid, OracleBackend, InferenceBackend};
    use crate::kinematics::Pose;
    use crate::sim::{Obstacle, Rect};

    fn world(obstacles: Vec<Obstacle>, robot: Pose) -> World {
        World::new(robot, 0.15, obstacles, Rect::new(-10.0, -10.0, 10.0, 10.0).unwrap(), 0).unwrap()
    }

    fn ob(label: &str, x0: f64, y0: f64, x1: f64, y1: f64) -> Obstacle {
        Obstacle {
            label: label.into(),
            rect: Rect::new(x0, y0, x1, y1).unwrap(),
        }
    }

    /// Projection of a square facing the camera at heading 0, computed by hand.
    fn facing_box(cam: &SimCamera, near: f64, y_left: f64, y_right: f64) -> [f64; 4] {
        let f = 320.0 / (PI / 6.0).tan();
        assert!((cam.focal_px() - f).abs() < 1e-9);
        [
            320.0 - f * y_left / near,
            180.0 - f * 0.3 / near,
            320.0 - f * y_right / near,
            180.0 + f * 0.3 / near,
        ]
    }

    #[test]
    fn empty_world_gives_zero_tensor() {
        let cam = SimCamera::default();
        let t = render_tensor(&world(vec![], Pose::default()), &cam, &GridConfig::default());
        assert!(t.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn one_obstacle_ahead_decodes_to_projection() {
        let cam = SimCamera::default();
        let cfg = GridConfig::default();
        let w = world(vec![ob("person", 2.0, -0.2, 2.3, 0.2)], Pose::default());
        let t = render_tensor(&w, &cam, &cfg);
        let nonzero: Vec<_> = (0..13)
            .flat_map(|r| (0..13).map(move |c| (r, c)))
            .filter(|&(r, c)| !t.is_cell_empty(r, c))
            .collect();
        assert_eq!(nonzero.len(), 1);

        let px = facing_box(&cam, 2.0, 0.2, -0.2);
        // Letterbox 640x360 into 416x416: scale 0.65, vertical pad 91.
        let expect = [px[0] * 0.65 / 416.0, (px[1] * 0.65 + 91.0) / 416.0, px[2] * 0.65 / 416.0, (px[3] * 0.65 + 91.0) / 416.0];
        let cands = decode_grid(&t, &cfg).unwrap();
        let live: Vec<_> = cands.iter().filter(|c| c.confidence > 0.0).collect();
        assert_eq!(live.len(), 1);
        let b = live[0].center.to_corners();
        for (got, want) in [b.x_min, b.y_min, b.x_max, b.y_max].iter().zip(expect) {
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
        assert_eq!(live[0].class_probs[0], 1.0);
    }

    #[test]
    fn obstacle_behind_or_far_is_invisible() {
        let cam = SimCamera::default();
        let cfg = GridConfig::default();
        let behind = world(vec![ob("person", -2.3, -0.2, -2.0, 0.2)], Pose::default());
        assert!(render_tensor(&behind, &cam, &cfg).values().iter().all(|v| *v == 0.0));
        let far = world(vec![ob("person", 7.0, -0.2, 7.3, 0.2)], Pose::default());
        assert!(render_tensor(&far, &cam, &cfg).values().iter().all(|v| *v == 0.0));
        let wall = world(vec![ob("wall", 2.0, -0.2, 2.3, 0.2)], Pose::default());
        assert!(render_tensor(&wall, &cam, &cfg).values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn nearer_obstacle_wins_shared_cell() {
        let cam = SimCamera::default();
        let cfg = GridConfig::default();
        let w = world(
            vec![ob("chair", 4.0, -0.3, 4.3, 0.3), ob("person", 2.0, -0.05, 2.2, 0.05)],
            Pose::default(),
        );
        let t = render_tensor(&w, &cam, &cfg);
        let chair = cfg.class_id("chair").unwrap();
        let person = cfg.class_id("person").unwrap();
        let cells: Vec<_> = (0..13).flat_map(|r| (0..13).map(move |c| (r, c))).filter(|&(r, c)| !t.is_cell_empty(r, c)).collect();
        assert_eq!(cells.len(), 1);
        let probs = t.class_probs(cells[0].0, cells[0].1);
        assert_eq!(probs[person], 1.0);
        assert_eq!(probs[chair], 0.0);
    }

    #[test]
    fn depth_examples() {
        let cam = SimCamera::default();
        assert!(raycast_depth(&world(vec![], Pose::default()), 9, &cam).samples().iter().all(|s| s.is_infinite()));
        let wall = world(vec![ob("wall", 1.0, -5.0, 1.1, 5.0)], Pose::default());
        let d = raycast_depth(&wall, 9, &cam);
        assert!((d.samples()[4] - 1.0).abs() < 1e-9);
        // Edge ray at 30 degrees off axis.
        assert!((d.samples()[0] - 1.0 / (PI / 6.0).cos()).abs() < 1e-9);
        let left = world(vec![ob("chair", 0.0, 2.0, 0.5, 2.5)], Pose::default());
        assert!(raycast_depth(&left, 9, &cam).samples().iter().all(|s| s.is_infinite()));
    }

    #[test]
    fn depth_decreases_on_approach() {
        let cam = SimCamera::default();
        let mut prev = f64::INFINITY;
        for k in 0..20 {
            let w = world(vec![ob("wall", 3.0, -5.0, 3.1, 5.0)], Pose::new(k as f64 * 0.1, 0.0, 0.0));
            let c = raycast_depth(&w, 31, &cam).central_min();
            assert!(c < prev);
            prev = c;
        }
    }

    #[test]
    fn jpeg_is_deterministic_and_well_formed() {
        let cam = SimCamera::default();
        let w = world(vec![ob("person", 2.0, -0.2, 2.3, 0.2)], Pose::default());
        let a = render_jpeg(&w, &cam);
        assert_eq!(a, render_jpeg(&w, &cam));
        assert!(jpeg::is_jpeg(&a));
        assert_eq!(jpeg::dimensions(&a), Some((640, 360)));

        let empty = render_jpeg(&world(vec![], Pose::default()), &cam);
        let img = image::load_from_memory(&empty).unwrap().to_rgb8();
        assert_eq!(img.dimensions(), (640, 360));
        let first = *img.get_pixel(0, 0);
        assert!(img.pixels().all(|p| p == &first));
    }

    #[test]
    fn oracle_backend_reads_embedded_tensor() {
        let cam = SimCamera::default();
        let cfg = GridConfig::default();
        let w = world(vec![ob("person", 2.0, -0.2, 2.3, 0.2), ob("chair", 3.0, 1.0, 3.4, 1.4)], Pose::default());
        let frame = render_frame(&w, &cam, &cfg);
        assert!(jpeg::is_jpeg(&frame));
        let got = OracleBackend.infer(&frame, &cfg).unwrap();
        let want = render_tensor(&w, &cam, &cfg);
        for (a, b) in got.values().iter().zip(want.values()) {
            assert!((a - b).abs() < 1e-6);
        }
        assert!(image::load_from_memory(&frame).is_ok());
    }

    #[test]
    fn bearings_are_symmetric() {
        let b = ray_bearings(5, 1.0);
        assert_eq!(b[2], 0.0);
        assert_eq!(b[0], 0.5);
        assert_eq!(b[4], -0.5);
        assert_eq!(ray_bearings(1, 1.0), vec![0.0]);
    }
}

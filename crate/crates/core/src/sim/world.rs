use serde::{Deserialize, Serialize};

use super::SimError;
use crate::kinematics::{integrate_pose, DriveGeometry, Pose, Twist};

/// Contact points are resolved to this arc length.
pub const CONTACT_TOLERANCE_M: f64 = 1e-6;

/// Axis-aligned rectangle in world meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, SimError> {
        let r = Rect { x0, y0, x1, y1 };
        if ![x0, y0, x1, y1].iter().all(|v| v.is_finite()) || x1 <= x0 || y1 <= y0 {
            return Err(SimError::Geometry(format!("bad rectangle ({x0}, {y0}, {x1}, {y1})")));
        }
        Ok(r)
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)
    }

    pub fn corners(&self) -> [(f64, f64); 4] {
        [(self.x0, self.y0), (self.x1, self.y0), (self.x1, self.y1), (self.x0, self.y1)]
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        let dx = (self.x0 - x).max(0.0).max(x - self.x1);
        let dy = (self.y0 - y).max(0.0).max(y - self.y1);
        dx.hypot(dy)
    }

    pub fn overlaps(&self, other: &Rect) -> bool {
        self.x0 < other.x1 && other.x0 < self.x1 && self.y0 < other.y1 && other.y0 < self.y1
    }

    /// Distance along the unit ray `(ox, oy) + t (dx, dy)` to the first hit, if any.
    pub fn ray_hit(&self, ox: f64, oy: f64, dx: f64, dy: f64) -> Option<f64> {
        let mut t_enter = f64::NEG_INFINITY;
        let mut t_exit = f64::INFINITY;
        for (o, d, lo, hi) in [(ox, dx, self.x0, self.x1), (oy, dy, self.y0, self.y1)] {
            if d == 0.0 {
                if o < lo || o > hi {
                    return None;
                }
            } else {
                let (a, b) = ((lo - o) / d, (hi - o) / d);
                t_enter = t_enter.max(a.min(b));
                t_exit = t_exit.min(a.max(b));
            }
        }
        (t_exit >= t_enter.max(0.0)).then_some(t_enter.max(0.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    /// Class name. Labels outside the detector's class list are invisible
    /// to the camera but still block motion and depth rays.
    pub label: String,
    pub rect: Rect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub robot: Pose,
    pub geometry: DriveGeometry,
    pub robot_radius: f64,
    pub obstacles: Vec<Obstacle>,
    pub bounds: Rect,
    pub rng_seed: u64,
    /// seconds
    pub time: f64,
}

impl World {
    pub fn new(
        robot: Pose,
        robot_radius: f64,
        obstacles: Vec<Obstacle>,
        bounds: Rect,
        rng_seed: u64,
    ) -> Result<Self, SimError> {
        if !(robot_radius.is_finite() && robot_radius > 0.0) {
            return Err(SimError::Geometry(format!("robot radius {robot_radius} must be positive")));
        }
        let w = World {
            robot,
            geometry: DriveGeometry::default(),
            robot_radius,
            obstacles,
            bounds,
            rng_seed,
            time: 0.0,
        };
        if w.collides(robot) {
            return Err(SimError::Geometry(format!(
                "robot start ({}, {}) is out of bounds or inside an obstacle",
                robot.x, robot.y
            )));
        }
        Ok(w)
    }

    /// True if the robot disk at `p` overlaps an obstacle or leaves the bounds.
    /// Touching is allowed.
    pub fn collides(&self, p: Pose) -> bool {
        let r = self.robot_radius;
        let b = &self.bounds;
        if p.x - r < b.x0 || p.x + r > b.x1 || p.y - r < b.y0 || p.y + r > b.y1 {
            return true;
        }
        self.obstacles.iter().any(|o| o.rect.distance_to(p.x, p.y) < r)
    }

    /// Clearance between the robot body and the nearest obstacle.
    pub fn clearance(&self) -> f64 {
        self.obstacles
            .iter()
            .map(|o| o.rect.distance_to(self.robot.x, self.robot.y) - self.robot_radius)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Advances the robot along the exact arc for `applied`, stopping at the
/// first contact with an obstacle or the bounds.
pub fn step_world(w: &World, applied: Twist, dt: f64) -> World {
    let mut next = w.clone();
    next.time += dt;
    if dt <= 0.0 || applied.is_zero() {
        return next;
    }
    let at = |f: f64| integrate_pose(w.robot, applied, f * dt);
    let path = applied.linear.abs() * dt;

    // Sample densely enough that no obstacle thinner than a quarter radius is skipped.
    let n = ((path / (w.robot_radius * 0.25)).ceil() as usize).clamp(1, 100_000);
    let mut free = 0.0;
    let mut hit = None;
    for k in 1..=n {
        let f = k as f64 / n as f64;
        if w.collides(at(f)) {
            hit = Some(f);
            break;
        }
        free = f;
    }
    let Some(mut blocked) = hit else {
        next.robot = at(1.0);
        return next;
    };
    if w.collides(w.robot) {
        // Already in contact; refuse to move deeper.
        return next;
    }
    while (blocked - free) * path > CONTACT_TOLERANCE_M {
        let mid = 0.5 * (free + blocked);
        if w.collides(at(mid)) {
            blocked = mid;
        } else {
            free = mid;
        }
    }
    next.robot = at(free);
    next
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arena() -> Rect {
        Rect::new(-10.0, -10.0, 10.0, 10.0).unwrap()
    }

    fn wall_world() -> World {
        let wall = Obstacle {
            label: "wall".into(),
            rect: Rect::new(1.0, -1.0, 1.2, 1.0).unwrap(),
        };
        World::new(Pose::default(), 0.15, vec![wall], arena(), 0).unwrap()
    }

    #[test]
    fn empty_world_matches_integrator() {
        let w = World::new(Pose::new(0.5, -0.2, 0.3), 0.15, vec![], arena(), 0).unwrap();
        let t = Twist::new(0.4, 0.7);
        let n = step_world(&w, t, 0.8);
        assert_eq!(n.robot, integrate_pose(w.robot, t, 0.8));
        assert!((n.time - 0.8).abs() < 1e-15);
    }

    #[test]
    fn zero_twist_only_advances_time() {
        let w = wall_world();
        let n = step_world(&w, Twist::ZERO, 0.05);
        assert_eq!(n.robot, w.robot);
        assert_eq!(n.obstacles, w.obstacles);
        assert_eq!(n.time, 0.05);
    }

    #[test]
    fn stops_at_wall_contact() {
        let n = step_world(&wall_world(), Twist::new(0.5, 0.0), 4.0);
        // Independent contact point: disk touches the face x = 1.
        assert!((n.robot.x - (1.0 - 0.15)).abs() < 1e-3, "{}", n.robot.x);
        assert!(n.robot.x <= 1.0 - 0.15);
        assert!(!n.collides(n.robot));
    }

    #[test]
    fn contact_resolution_is_tight_on_small_steps() {
        let mut w = wall_world();
        for _ in 0..400 {
            w = step_world(&w, Twist::new(0.5, 0.0), 0.05);
            assert!(!w.collides(w.robot));
        }
        assert!((w.robot.x - 0.85).abs() < 1e-5);
    }

    #[test]
    fn bounds_stop_motion() {
        let w = World::new(Pose::default(), 0.15, vec![], Rect::new(-1.0, -1.0, 1.0, 1.0).unwrap(), 0).unwrap();
        let n = step_world(&w, Twist::new(-1.0, 0.0), 5.0);
        assert!((n.robot.x + 0.85).abs() < 1e-5);
    }

    #[test]
    fn pure_rotation_against_wall_is_free() {
        let mut w = wall_world();
        w = step_world(&w, Twist::new(0.5, 0.0), 4.0);
        let n = step_world(&w, Twist::new(0.0, 1.0), 1.0);
        assert!((n.robot.theta - 1.0).abs() < 1e-12);
        assert_eq!((n.robot.x, n.robot.y), (w.robot.x, w.robot.y));
    }

    #[test]
    fn start_inside_obstacle_is_rejected() {
        let o = Obstacle {
            label: "chair".into(),
            rect: Rect::new(-0.1, -0.1, 0.1, 0.1).unwrap(),
        };
        assert!(World::new(Pose::default(), 0.15, vec![o], arena(), 0).is_err());
        assert!(Rect::new(1.0, 0.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn ray_rect_hits() {
        let r = Rect::new(1.0, -1.0, 2.0, 1.0).unwrap();
        assert_eq!(r.ray_hit(0.0, 0.0, 1.0, 0.0), Some(1.0));
        assert_eq!(r.ray_hit(0.0, 0.0, -1.0, 0.0), None);
        assert_eq!(r.ray_hit(0.0, 2.0, 1.0, 0.0), None);
        let d = std::f64::consts::FRAC_1_SQRT_2;
        let t = r.ray_hit(0.0, 0.0, d, d).unwrap();
        assert!((t - 2f64.sqrt()).abs() < 1e-12);
    }
}

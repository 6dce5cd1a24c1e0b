//! Differential-drive kinematics, exact-arc odometry and the command watchdog.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

/// Below this turn rate the pose update uses the straight-line form.
pub const STRAIGHT_LINE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveGeometry {
    /// Wheel radius (m).
    pub wheel_radius: f64,
    /// Distance between wheel contact points (m).
    pub track_width: f64,
    /// Wheel speed limit (rad/s).
    pub max_wheel_speed: f64,
}

impl Default for DriveGeometry {
    fn default() -> Self {
        DriveGeometry {
            wheel_radius: 0.05,
            track_width: 0.20,
            max_wheel_speed: 10.0,
        }
    }
}

impl DriveGeometry {
    pub fn is_valid(&self) -> bool {
        [self.wheel_radius, self.track_width, self.max_wheel_speed]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
    }
}

/// Wheel angular rates (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WheelSpeeds {
    pub left: f64,
    pub right: f64,
}

/// Planar body velocity: forward speed (m/s) and counter-clockwise turn rate (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Twist {
    pub linear: f64,
    pub angular: f64,
}

impl Twist {
    pub const ZERO: Twist = Twist {
        linear: 0.0,
        angular: 0.0,
    };

    pub const fn new(linear: f64, angular: f64) -> Self {
        Twist { linear, angular }
    }

    pub fn is_zero(&self) -> bool {
        self.linear == 0.0 && self.angular == 0.0
    }
}

/// World-frame pose. `theta` is kept in `(-PI, PI]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn distance_to(&self, other: &Pose) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Maps an angle into `(-PI, PI]`.
pub fn normalize_angle(angle: f64) -> f64 {
    let mut a = angle % TAU;
    if a > PI {
        a -= TAU;
    } else if a <= -PI {
        a += TAU;
    }
    a
}

pub fn forward_kinematics(w: WheelSpeeds, g: &DriveGeometry) -> Twist {
    Twist {
        linear: g.wheel_radius * (w.left + w.right) / 2.0,
        angular: g.wheel_radius * (w.right - w.left) / g.track_width,
    }
}

/// Wheel rates for a twist. If either wheel would exceed the limit, both are
/// scaled by the same factor so the curvature is preserved.
pub fn inverse_kinematics(t: Twist, g: &DriveGeometry) -> WheelSpeeds {
    let half_track = g.track_width / 2.0;
    let left = (t.linear - t.angular * half_track) / g.wheel_radius;
    let right = (t.linear + t.angular * half_track) / g.wheel_radius;
    let peak = left.abs().max(right.abs());
    if peak > g.max_wheel_speed {
        let k = g.max_wheel_speed / peak;
        WheelSpeeds {
            left: left * k,
            right: right * k,
        }
    } else {
        WheelSpeeds { left, right }
    }
}

/// Exact constant-twist integration over `dt` seconds along a circular arc.
pub fn integrate_pose(p: Pose, t: Twist, dt: f64) -> Pose {
    debug_assert!(dt >= 0.0, "negative dt {dt}");
    let dtheta = t.angular * dt;
    let (x, y) = if t.angular.abs() < STRAIGHT_LINE_EPS {
        let d = t.linear * dt;
        (p.x + d * p.theta.cos(), p.y + d * p.theta.sin())
    } else {
        let r = t.linear / t.angular;
        (
            p.x + r * ((p.theta + dtheta).sin() - p.theta.sin()),
            p.y + r * (p.theta.cos() - (p.theta + dtheta).cos()),
        )
    };
    Pose {
        x,
        y,
        theta: normalize_angle(p.theta + dtheta),
    }
}

/// Passes the command while its age is within the timeout (inclusive), else stops.
pub fn watchdog_gate(last_command_age: f64, timeout: f64, commanded: Twist) -> Twist {
    if last_command_age <= timeout {
        commanded
    } else {
        Twist::ZERO
    }
}

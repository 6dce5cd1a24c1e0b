use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{DriveDirection, Intent, TurnDirection};
use crate::kinematics::{forward_kinematics, inverse_kinematics, DriveGeometry, Twist};

/// Fixed cruise rates used to turn intents into timed motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CruiseLimits {
    /// m/s
    pub linear: f64,
    /// rad/s
    pub angular: f64,
}

impl Default for CruiseLimits {
    fn default() -> Self {
        CruiseLimits {
            linear: 0.2,
            angular: PI / 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanSegment {
    pub twist: Twist,
    pub duration_s: f64,
}

/// Timed open-loop motion for an intent. Queries and speech produce no motion.
///
/// If a cruise rate would saturate the wheels of `g`, the rate is reduced to
/// the wheel limit and the duration grows to cover the same displacement.
pub fn intent_to_plan(intent: &Intent, g: &DriveGeometry, cruise: &CruiseLimits) -> Vec<PlanSegment> {
    match intent {
        Intent::Drive { direction, distance_m } => {
            let sign = match direction {
                DriveDirection::Forward => 1.0,
                DriveDirection::Backward => -1.0,
            };
            let speed = achievable(Twist::new(cruise.linear, 0.0), g).linear;
            vec![PlanSegment {
                twist: Twist::new(sign * speed, 0.0),
                duration_s: distance_m / speed,
            }]
        }
        Intent::Turn { direction, angle_deg } => {
            let sign = match direction {
                TurnDirection::Left => 1.0,
                TurnDirection::Right => -1.0,
            };
            let rate = achievable(Twist::new(0.0, cruise.angular), g).angular;
            vec![PlanSegment {
                twist: Twist::new(0.0, sign * rate),
                duration_s: (angle_deg * PI / 180.0) / rate,
            }]
        }
        Intent::Stop => vec![PlanSegment {
            twist: Twist::ZERO,
            duration_s: 0.0,
        }],
        Intent::QueryObjects | Intent::Speak { .. } => Vec::new(),
    }
}

fn achievable(t: Twist, g: &DriveGeometry) -> Twist {
    let half_track = g.track_width / 2.0;
    let left = (t.linear - t.angular * half_track) / g.wheel_radius;
    let right = (t.linear + t.angular * half_track) / g.wheel_radius;
    if left.abs().max(right.abs()) > g.max_wheel_speed {
        forward_kinematics(inverse_kinematics(t, g), g)
    } else {
        t
    }
}

pub fn plan_duration(plan: &[PlanSegment]) -> f64 {
    plan.iter().map(|s| s.duration_s).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{integrate_pose, Pose};
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let g = DriveGeometry::default();
        let c = CruiseLimits::default();
        let drive = Intent::Drive { direction: DriveDirection::Forward, distance_m: 1.0 };
        assert_eq!(intent_to_plan(&drive, &g, &c), vec![PlanSegment { twist: Twist::new(0.2, 0.0), duration_s: 5.0 }]);
        let turn = Intent::Turn { direction: TurnDirection::Left, angle_deg: 90.0 };
        assert_eq!(intent_to_plan(&turn, &g, &c), vec![PlanSegment { twist: Twist::new(0.0, PI / 4.0), duration_s: 2.0 }]);
        assert_eq!(intent_to_plan(&Intent::Stop, &g, &c), vec![PlanSegment { twist: Twist::ZERO, duration_s: 0.0 }]);
        assert!(intent_to_plan(&Intent::QueryObjects, &g, &c).is_empty());
        assert!(intent_to_plan(&Intent::Speak { text: "hi".into() }, &g, &c).is_empty());
    }

    #[test]
    fn backward_and_right_are_negative() {
        let g = DriveGeometry::default();
        let c = CruiseLimits::default();
        let back = intent_to_plan(&Intent::Drive { direction: DriveDirection::Backward, distance_m: 0.4 }, &g, &c);
        assert_eq!(back[0].twist, Twist::new(-0.2, 0.0));
        let right = intent_to_plan(&Intent::Turn { direction: TurnDirection::Right, angle_deg: 45.0 }, &g, &c);
        assert_eq!(right[0].twist, Twist::new(0.0, -PI / 4.0));
        assert!((right[0].duration_s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn saturating_cruise_is_slowed() {
        let g = DriveGeometry { max_wheel_speed: 2.0, ..DriveGeometry::default() };
        let c = CruiseLimits::default();
        let plan = intent_to_plan(&Intent::Drive { direction: DriveDirection::Forward, distance_m: 1.0 }, &g, &c);
        assert!((plan[0].twist.linear - 0.1).abs() < 1e-12);
        assert!((plan[0].duration_s - 10.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn drive_plan_displaces_exactly(dist in 0.001f64..10.0, forward in any::<bool>()) {
            let g = DriveGeometry::default();
            let c = CruiseLimits::default();
            let direction = if forward { DriveDirection::Forward } else { DriveDirection::Backward };
            let plan = intent_to_plan(&Intent::Drive { direction, distance_m: dist }, &g, &c);
            prop_assert_eq!(plan_duration(&plan), dist / 0.2);
            let end = plan.iter().fold(Pose::default(), |p, s| integrate_pose(p, s.twist, s.duration_s));
            prop_assert!((end.x.abs() - dist).abs() < 1e-9);
            prop_assert!((end.x > 0.0) == forward);
        }
    }
}

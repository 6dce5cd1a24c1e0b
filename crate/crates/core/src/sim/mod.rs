//! Deterministic 2D world standing in for the robot base, camera and depth sensor.

mod camera;
mod node;
mod scenario;
mod world;

pub use camera::{
    project_obstacles, ray_bearings, raycast_depth, render_frame, render_jpeg, render_tensor, Projection,
    SimCamera,
};
pub use node::SimFrontNode;
pub use scenario::{Scenario, ScriptAction, ScriptStep};
pub use world::{step_world, Obstacle, Rect, World, CONTACT_TOLERANCE_M};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("camera: {0}")]
    Camera(String),
    #[error("scenario line {line}: {msg}")]
    Scenario { line: usize, msg: String },
    #[error("{0}")]
    Io(String),
}

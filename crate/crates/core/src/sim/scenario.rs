//! Plain-text scenario files.
//!
//! ```text
//! # three objects down a corridor
//! seed = 7
//! bounds = -1 -3 8 3
//! start = 0 0 0          # x y heading_deg
//! person 2.0 -0.6 2.3 -0.3
//! wall 6 -3 6.2 3
//! @ 0.5 {"transcript": "what do you see"}
//! @ 3.0 sever
//! ```
//!
//! Header lines are `key = value`. Obstacle lines are `class x0 y0 x1 y1`
//! in meters; underscores in the class stand for spaces. `@ t action` lines
//! form the operator script, where the action is a JSON command body,
//! `sever` or `restore`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Obstacle, Rect, SimCamera, SimError, World};
use crate::agent::AgentConfig;
use crate::detection::COCO_CLASSES;
use crate::kinematics::Pose;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum ScriptAction {
    Command { body: serde_json::Value },
    /// Drop all bytes on the link in both directions.
    Sever,
    Restore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptStep {
    pub at_s: f64,
    #[serde(flatten)]
    pub action: ScriptAction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub bounds: Rect,
    pub start: Pose,
    pub duration_s: f64,
    pub robot_radius: f64,
    pub tick_hz: f64,
    pub depth_samples: usize,
    /// Extra obstacles placed at random from the seed.
    pub scatter: usize,
    pub camera: SimCamera,
    pub agent: AgentConfig,
    pub obstacles: Vec<Obstacle>,
    pub script: Vec<ScriptStep>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            name: "unnamed".into(),
            seed: 0,
            bounds: Rect { x0: -5.0, y0: -5.0, x1: 5.0, y1: 5.0 },
            start: Pose::default(),
            duration_s: 10.0,
            robot_radius: 0.15,
            tick_hz: 20.0,
            depth_samples: 31,
            scatter: 0,
            camera: SimCamera::default(),
            agent: AgentConfig::default(),
            obstacles: Vec::new(),
            script: Vec::new(),
        }
    }
}

fn floats(value: &str, n: usize) -> Option<Vec<f64>> {
    let v: Vec<f64> = value.split_whitespace().map(|t| t.parse::<f64>()).collect::<Result<_, _>>().ok()?;
    (v.len() == n && v.iter().all(|x| x.is_finite())).then_some(v)
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, SimError> {
        let mut sc = Scenario::default();
        let mut agent_lines = String::new();
        for (i, raw) in text.lines().enumerate() {
            let err = |msg: String| SimError::Scenario { line: i + 1, msg };
            let trimmed = raw.trim();
            if let Some(rest) = trimmed.strip_prefix('@') {
                let rest = rest.trim();
                let (t, action) = rest.split_once(char::is_whitespace).ok_or_else(|| err("expected '@ time action'".into()))?;
                let at_s: f64 = t.parse().ok().filter(|v: &f64| v.is_finite() && *v >= 0.0).ok_or_else(|| err(format!("bad time '{t}'")))?;
                let action = match action.trim() {
                    "sever" => ScriptAction::Sever,
                    "restore" => ScriptAction::Restore,
                    json => ScriptAction::Command {
                        body: serde_json::from_str(json).map_err(|e| err(format!("bad command JSON: {e}")))?,
                    },
                };
                sc.script.push(ScriptStep { at_s, action });
                continue;
            }
            let line = trimmed.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some((key, value)) = line.split_once('=') {
                let (key, value) = (key.trim(), value.trim());
                let num = |v: &str| v.parse::<f64>().ok().filter(|x| x.is_finite() && *x > 0.0);
                let bad = || err(format!("bad value for {key}: '{value}'"));
                match key {
                    "name" => sc.name = value.to_string(),
                    "seed" => sc.seed = value.parse().map_err(|_| bad())?,
                    "bounds" => {
                        let v = floats(value, 4).ok_or_else(bad)?;
                        sc.bounds = Rect::new(v[0], v[1], v[2], v[3]).map_err(|e| err(e.to_string()))?;
                    }
                    "start" => {
                        let v = floats(value, 3).ok_or_else(bad)?;
                        sc.start = Pose::new(v[0], v[1], v[2].to_radians());
                    }
                    "duration" => sc.duration_s = num(value).ok_or_else(bad)?,
                    "robot_radius" => sc.robot_radius = num(value).ok_or_else(bad)?,
                    "tick_hz" => sc.tick_hz = num(value).ok_or_else(bad)?,
                    "depth_samples" => sc.depth_samples = value.parse().ok().filter(|n| *n > 0).ok_or_else(bad)?,
                    "scatter" => sc.scatter = value.parse().map_err(|_| bad())?,
                    "hfov_deg" => sc.camera.hfov = num(value).ok_or_else(bad)?.to_radians(),
                    "image" => {
                        let (w, h) = value.split_once('x').ok_or_else(bad)?;
                        sc.camera.width = w.trim().parse().map_err(|_| bad())?;
                        sc.camera.height = h.trim().parse().map_err(|_| bad())?;
                    }
                    "net_size" => sc.camera.net_size = value.parse().map_err(|_| bad())?,
                    "max_range" => sc.camera.max_range = num(value).ok_or_else(bad)?,
                    "camera_height" => sc.camera.mount_height = num(value).ok_or_else(bad)?,
                    "object_height" => sc.camera.object_height = num(value).ok_or_else(bad)?,
                    // Everything else is front-agent configuration.
                    _ => {
                        agent_lines.push_str(line);
                        agent_lines.push('\n');
                    }
                }
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() < 5 {
                return Err(err(format!("expected 'class x0 y0 x1 y1', got '{line}'")));
            }
            let (label, nums) = toks.split_at(toks.len() - 4);
            let v = floats(&nums.join(" "), 4).ok_or_else(|| err(format!("bad coordinates in '{line}'")))?;
            sc.obstacles.push(Obstacle {
                label: label.join(" ").replace('_', " "),
                rect: Rect::new(v[0], v[1], v[2], v[3]).map_err(|e| err(e.to_string()))?,
            });
        }
        sc.agent = AgentConfig::parse(&agent_lines).map_err(|e| SimError::Scenario { line: 0, msg: e.to_string() })?;
        sc.camera.validate()?;
        sc.script.sort_by(|a, b| a.at_s.total_cmp(&b.at_s));
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn tick_dt(&self) -> f64 {
        1.0 / self.tick_hz
    }

    /// Builds the initial world. `seed` overrides the scenario's own seed.
    pub fn world(&self, seed: Option<u64>) -> Result<World, SimError> {
        let seed = seed.unwrap_or(self.seed);
        let mut obstacles = self.obstacles.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut placed = 0;
        let mut attempts = 0;
        let b = self.bounds;
        while placed < self.scatter {
            attempts += 1;
            if attempts > 1000 * (self.scatter + 1) {
                return Err(SimError::Geometry(format!("could not place {} scattered obstacles", self.scatter)));
            }
            let (w, h) = (rng.random_range(0.2..0.5), rng.random_range(0.2..0.5));
            if b.x1 - b.x0 <= w || b.y1 - b.y0 <= h {
                return Err(SimError::Geometry("bounds too small to scatter obstacles".into()));
            }
            let x0 = rng.random_range(b.x0..b.x1 - w);
            let y0 = rng.random_range(b.y0..b.y1 - h);
            let label = COCO_CLASSES[rng.random_range(0..COCO_CLASSES.len())];
            let rect = Rect::new(x0, y0, x0 + w, y0 + h)?;
            let clear_of_robot = rect.distance_to(self.start.x, self.start.y) > self.robot_radius * 2.0;
            if clear_of_robot && obstacles.iter().all(|o| !o.rect.overlaps(&rect)) {
                obstacles.push(Obstacle { label: label.to_string(), rect });
                placed += 1;
            }
        }
        let mut world = World::new(self.start, self.robot_radius, obstacles, self.bounds, seed)?;
        world.geometry = self.agent.geometry;
        Ok(world)
    }
}

use super::{raycast_depth, render_frame, step_world, Scenario, SimCamera, SimError, World};
use crate::agent::{FrontAgent, TickOutput};
use crate::detection::GridConfig;
use crate::kinematics::Twist;
use crate::protocol::{FrameEncoding, NodeRole, WireMessage, PROTO_VERSION};

/// A complete simulated front node: agent logic driving a simulated world.
#[derive(Debug, Clone)]
pub struct SimFrontNode {
    world: World,
    agent: FrontAgent,
    camera: SimCamera,
    grid: GridConfig,
    depth_samples: usize,
    tick_dt: f64,
    frame_every: u64,
    ticks: u64,
    last_applied: Twist,
}

impl SimFrontNode {
    pub fn new(scenario: &Scenario, seed: Option<u64>, grid: GridConfig) -> Result<Self, SimError> {
        let world = scenario.world(seed)?;
        let agent = FrontAgent::new(scenario.agent.clone(), world.robot);
        let tick_dt = scenario.tick_dt();
        let frame_every = ((scenario.tick_hz / scenario.agent.frame_hz).round() as u64).max(1);
        Ok(SimFrontNode {
            world,
            agent,
            camera: scenario.camera.clone(),
            grid,
            depth_samples: scenario.depth_samples,
            tick_dt,
            frame_every,
            ticks: 0,
            last_applied: Twist::ZERO,
        })
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn agent(&self) -> &FrontAgent {
        &self.agent
    }

    pub fn camera(&self) -> &SimCamera {
        &self.camera
    }

    pub fn tick_dt(&self) -> f64 {
        self.tick_dt
    }

    pub fn last_applied(&self) -> Twist {
        self.last_applied
    }

    /// Simulated clock in whole milliseconds.
    pub fn now_ms(&self) -> u64 {
        (self.world.time * 1000.0).round() as u64
    }

    pub fn hello() -> WireMessage {
        WireMessage::Hello {
            node_role: NodeRole::Front,
            proto_version: PROTO_VERSION,
        }
    }

    pub fn handle_message(&mut self, m: &WireMessage) -> Vec<WireMessage> {
        self.agent.handle_message(m, self.world.time)
    }

    /// One control period: gate and apply the command, move the world,
    /// emit telemetry and, at the frame rate, a camera frame.
    pub fn step(&mut self) -> Vec<WireMessage> {
        let depth = raycast_depth(&self.world, self.depth_samples, &self.camera);
        let dt = self.tick_dt;
        // Derive time from the tick count so it does not drift.
        let now = (self.ticks + 1) as f64 * dt;
        let mut next_world = None;
        let TickOutput { telemetry, applied } = self.agent.tick_with(dt, now, &depth, |_, twist, dt| {
            let w = step_world(&self.world, twist, dt);
            let pose = w.robot;
            next_world = Some(w);
            pose
        });
        self.world = next_world.expect("motion closure runs once per tick");
        self.world.time = now;
        self.last_applied = applied;
        self.ticks += 1;

        let mut out = vec![telemetry];
        if self.ticks % self.frame_every == 0 {
            out.push(WireMessage::FrameData {
                timestamp_ms: self.now_ms(),
                encoding: FrameEncoding::Jpeg,
                payload: render_frame(&self.world, &self.camera, &self.grid),
            });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drives_when_commanded_and_reports_ground_truth() {
        let sc = Scenario::parse("bounds = -5 -5 5 5").unwrap();
        let mut node = SimFrontNode::new(&sc, None, GridConfig::default()).unwrap();
        node.handle_message(&WireMessage::DriveCmd { linear: 0.2, angular: 0.0, seq: 1 });
        let mut frames = 0;
        for _ in 0..12 {
            for m in node.step() {
                match m {
                    WireMessage::Telemetry(t) => assert_eq!(t.pose, node.world().robot),
                    WireMessage::FrameData { .. } => frames += 1,
                    other => panic!("{other:?}"),
                }
            }
        }
        assert_eq!(frames, 6);
        // Ticks up to and including 0.5 s apply the command; later ones do not.
        assert!((node.world().robot.x - 0.2f32 as f64 * 0.5).abs() < 1e-9);
        assert_eq!(node.now_ms(), 600);
    }

    #[test]
    fn halts_short_of_wall() {
        let sc = Scenario::parse("bounds = -2 -2 3 2\nwall 1 -2 1.1 2").unwrap();
        let mut node = SimFrontNode::new(&sc, None, GridConfig::default()).unwrap();
        for k in 0..200 {
            node.handle_message(&WireMessage::DriveCmd { linear: 0.2, angular: 0.0, seq: k + 1 });
            node.step();
        }
        let clearance = 1.0 - node.world().robot.x;
        assert!(clearance >= 0.3 - 1e-3, "{clearance}");
        assert!(clearance < 0.31, "{clearance}");
    }
}

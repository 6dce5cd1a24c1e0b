//! Front-node control loop: command intake, watchdog, obstacle gating,
//! odometry and telemetry.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{integrate_pose, watchdog_gate, DriveGeometry, Pose, Twist};
use crate::protocol::{FrameEncoding, MessageType, Telemetry, WireMessage};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("invalid depth profile: {0}")]
    Depth(String),
    #[error("camera: {0}")]
    Camera(String),
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub geometry: DriveGeometry,
    /// seconds
    pub watchdog_timeout: f64,
    /// meters
    pub stop_distance: f64,
    pub telemetry_hz: f64,
    pub frame_hz: f64,
    pub battery_pct: u8,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            geometry: DriveGeometry::default(),
            watchdog_timeout: 0.5,
            stop_distance: 0.3,
            telemetry_hz: 20.0,
            frame_hz: 10.0,
            battery_pct: 100,
        }
    }
}

impl AgentConfig {
    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, AgentError> {
        let mut cfg = AgentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| AgentError::Config { line: i + 1, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let num = || -> Result<f64, AgentError> {
                value
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite() && *v > 0.0)
                    .ok_or_else(|| err(format!("{key} must be a positive number, got '{value}'")))
            };
            match key {
                "wheel_radius" => cfg.geometry.wheel_radius = num()?,
                "track_width" => cfg.geometry.track_width = num()?,
                "max_wheel_speed" => cfg.geometry.max_wheel_speed = num()?,
                "watchdog_timeout" => cfg.watchdog_timeout = num()?,
                "stop_distance" => cfg.stop_distance = num()?,
                "telemetry_hz" => cfg.telemetry_hz = num()?,
                "frame_hz" => cfg.frame_hz = num()?,
                "battery_pct" => {
                    cfg.battery_pct = value
                        .parse::<u8>()
                        .ok()
                        .filter(|b| *b <= 100)
                        .ok_or_else(|| err(format!("battery_pct must be 0..=100, got '{value}'")))?
                }
                other => return Err(err(format!("unknown key '{other}'"))),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, AgentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AgentError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn tick_period(&self) -> f64 {
        1.0 / self.telemetry_hz
    }
}

/// Horizontal fan of range samples, left to right. `+inf` means no return.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthProfile {
    samples: Vec<f64>,
    fov: f64,
}

impl DepthProfile {
    pub fn new(samples: Vec<f64>, fov: f64) -> Result<Self, AgentError> {
        if samples.is_empty() {
            return Err(AgentError::Depth("needs at least one sample".into()));
        }
        if let Some(s) = samples.iter().find(|s| !(**s > 0.0) || s.is_nan()) {
            return Err(AgentError::Depth(format!("sample {s} is not positive")));
        }
        if !(fov.is_finite() && fov > 0.0) {
            return Err(AgentError::Depth(format!("fov {fov} must be positive")));
        }
        Ok(DepthProfile { samples, fov })
    }

    /// Profile with no returns at all.
    pub fn clear(n: usize, fov: f64) -> Self {
        DepthProfile::new(vec![f64::INFINITY; n.max(1)], fov).expect("clear profile is valid")
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn fov(&self) -> f64 {
        self.fov
    }

    /// Samples in the middle third of the fan. Never empty.
    pub fn central_third(&self) -> &[f64] {
        let n = self.samples.len();
        let lo = n / 3;
        let hi = (n - n / 3).max(lo + 1);
        &self.samples[lo..hi]
    }

    pub fn central_min(&self) -> f64 {
        self.central_third().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Zeroes forward motion when the central corridor is closer than
/// `stop_distance`. Turning and reversing are never gated.
pub fn obstacle_gate(d: &DepthProfile, t: Twist, stop_distance: f64) -> Twist {
    if t.linear > 0.0 && d.central_min() < stop_distance {
        Twist::new(0.0, t.angular)
    } else {
        t
    }
}

/// [`obstacle_gate`], plus a cap on forward speed so one step of `dt`
/// cannot carry the robot inside `stop_distance` of the nearest central return.
pub fn gate_for_step(d: &DepthProfile, t: Twist, stop_distance: f64, dt: f64) -> Twist {
    let gated = obstacle_gate(d, t, stop_distance);
    if gated.linear > 0.0 && dt > 0.0 {
        let room = (d.central_min() - stop_distance).max(0.0);
        Twist::new(gated.linear.min(room / dt), gated.angular)
    } else {
        gated
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CameraFrame {
    pub timestamp_ms: u64,
    pub jpeg: Vec<u8>,
}

pub trait CameraSource {
    /// Next frame; timestamps strictly increase across calls.
    fn next_frame(&mut self, now_ms: u64) -> Result<CameraFrame, AgentError>;
}

pub trait DepthSource {
    fn profile(&mut self) -> DepthProfile;
}

/// Depth source that never sees anything.
#[derive(Debug, Clone)]
pub struct NoDepth {
    pub samples: usize,
    pub fov: f64,
}

impl DepthSource for NoDepth {
    fn profile(&mut self) -> DepthProfile {
        DepthProfile::clear(self.samples, self.fov)
    }
}

/// Cycles through the `.jpg`/`.jpeg` files of a directory in name order.
#[derive(Debug)]
pub struct DirectoryCamera {
    files: Vec<PathBuf>,
    next: usize,
    last_ts: Option<u64>,
}

impl DirectoryCamera {
    pub fn open(dir: &Path) -> Result<Self, AgentError> {
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| AgentError::Io(format!("{}: {e}", dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension()
                    .and_then(|x| x.to_str())
                    .is_some_and(|x| x.eq_ignore_ascii_case("jpg") || x.eq_ignore_ascii_case("jpeg"))
            })
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(AgentError::Camera(format!("no JPEG files in {}", dir.display())));
        }
        Ok(DirectoryCamera {
            files,
            next: 0,
            last_ts: None,
        })
    }
}

impl CameraSource for DirectoryCamera {
    fn next_frame(&mut self, now_ms: u64) -> Result<CameraFrame, AgentError> {
        let path = &self.files[self.next];
        self.next = (self.next + 1) % self.files.len();
        let jpeg = std::fs::read(path).map_err(|e| AgentError::Camera(format!("{}: {e}", path.display())))?;
        let timestamp_ms = match self.last_ts {
            Some(last) if now_ms <= last => last + 1,
            _ => now_ms,
        };
        self.last_ts = Some(timestamp_ms);
        Ok(CameraFrame { timestamp_ms, jpeg })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickOutput {
    pub telemetry: WireMessage,
    pub applied: Twist,
}

/// Front-node state. Times are seconds on the agent's monotonic clock.
#[derive(Debug, Clone)]
pub struct FrontAgent {
    config: AgentConfig,
    pose: Pose,
    last_cmd: Twist,
    last_cmd_time: Option<f64>,
    last_rx_time: Option<f64>,
    last_seq: HashMap<MessageType, u64>,
    telemetry_seq: u64,
    last_now: f64,
}

impl FrontAgent {
    pub fn new(config: AgentConfig, pose: Pose) -> Self {
        FrontAgent {
            config,
            pose,
            last_cmd: Twist::ZERO,
            last_cmd_time: None,
            last_rx_time: None,
            last_seq: HashMap::new(),
            telemetry_seq: 0,
            last_now: f64::NEG_INFINITY,
        }
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn last_command(&self) -> Twist {
        self.last_cmd
    }

    pub fn last_seq(&self, t: MessageType) -> Option<u64> {
        self.last_seq.get(&t).copied()
    }

    fn observe_time(&mut self, now: f64) -> f64 {
        // Clock must not run backwards; clamp rather than trust the caller.
        self.last_now = self.last_now.max(now);
        self.last_now
    }

    fn fresh_seq(&mut self, t: MessageType, seq: u64) -> bool {
        match self.last_seq.get(&t) {
            Some(&last) if seq <= last => false,
            _ => {
                self.last_seq.insert(t, seq);
                true
            }
        }
    }

    /// Applies one inbound message and returns any replies.
    pub fn handle_message(&mut self, m: &WireMessage, now: f64) -> Vec<WireMessage> {
        let now = self.observe_time(now);
        self.last_rx_time = Some(now);
        match m {
            WireMessage::DriveCmd {
                linear,
                angular,
                seq,
            } => {
                if self.fresh_seq(MessageType::DriveCmd, *seq) {
                    self.last_cmd = Twist::new(*linear as f64, *angular as f64);
                    self.last_cmd_time = Some(now);
                } else {
                    warn!("ignoring stale DriveCmd seq {seq}");
                }
                Vec::new()
            }
            WireMessage::StopCmd { seq } => {
                self.fresh_seq(MessageType::StopCmd, *seq);
                self.last_cmd = Twist::ZERO;
                self.last_cmd_time = Some(now);
                Vec::new()
            }
            WireMessage::Ping { nonce } => vec![WireMessage::Pong { nonce: *nonce }],
            WireMessage::Hello { .. } => Vec::new(),
            // No audio output here; the text is only logged.
            WireMessage::Speak { lang, text } => {
                info!("speak [{lang}] {text}");
                Vec::new()
            }
            other => {
                warn!("front agent ignoring {:?} message", other.message_type());
                Vec::new()
            }
        }
    }

    /// Twist the drive would apply at `now` for a step of `dt`.
    pub fn applied_twist(&self, now: f64, dt: f64, depth: &DepthProfile) -> Twist {
        let age = self.last_cmd_time.map_or(f64::INFINITY, |t| now - t);
        let commanded = watchdog_gate(age, self.config.watchdog_timeout, self.last_cmd);
        gate_for_step(depth, commanded, self.config.stop_distance, dt)
    }

    /// Advances odometry by `dt` and emits telemetry.
    pub fn tick(&mut self, dt: f64, now: f64, depth: &DepthProfile) -> TickOutput {
        self.tick_with(dt, now, depth, integrate_pose)
    }

    /// Like [`tick`](Self::tick), but `motion` decides the resulting pose,
    /// e.g. a simulated drive that stops on contact.
    pub fn tick_with<F>(&mut self, dt: f64, now: f64, depth: &DepthProfile, motion: F) -> TickOutput
    where
        F: FnOnce(Pose, Twist, f64) -> Pose,
    {
        let now = self.observe_time(now);
        let applied = self.applied_twist(now, dt, depth);
        self.pose = motion(self.pose, applied, dt.max(0.0));
        self.telemetry_seq += 1;
        let link_age_ms = self.last_rx_time.map_or(u32::MAX, |t| {
            ((now - t).max(0.0) * 1000.0).round().min(u32::MAX as f64) as u32
        });
        TickOutput {
            telemetry: WireMessage::Telemetry(Telemetry {
                pose: self.pose,
                battery_pct: self.config.battery_pct,
                link_age_ms,
                seq: self.telemetry_seq,
            }),
            applied,
        }
    }

    pub fn frame_message(frame: CameraFrame) -> WireMessage {
        WireMessage::FrameData {
            timestamp_ms: frame.timestamp_ms,
            encoding: FrameEncoding::Jpeg,
            payload: frame.jpeg,
        }
    }
}

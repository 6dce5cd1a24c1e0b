//! Runs a scenario end to end in one process: a simulated front node and a
//! central session joined by an encoded byte link, on one simulated clock.

use std::collections::VecDeque;

use serde_json::Value;

use crate::command::TranslatorClient;
use crate::detection::InferenceBackend;
use crate::kinematics::{Pose, Twist};
use crate::protocol::{encode_frame, FrameDecoder, WireMessage};
use crate::server::{Central, CentralConfig, CommandResponse, EventLog};
use crate::sim::{Scenario, ScriptAction, ScriptStep, SimError, SimFrontNode};

#[derive(Debug, Clone, PartialEq)]
pub struct TickTrace {
    pub time_s: f64,
    pub applied: Twist,
    pub pose: Pose,
    pub link_up: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptResult {
    pub at_ms: u64,
    pub body: Value,
    pub response: CommandResponse,
}

pub struct Harness {
    central: Central,
    front: SimFrontNode,
    backend: Box<dyn InferenceBackend>,
    script: VecDeque<ScriptStep>,
    duration_s: f64,
    link_up: bool,
    to_front: FrameDecoder,
    to_central: FrameDecoder,
    telemetry_wire: Vec<u8>,
    trace: Vec<TickTrace>,
    results: Vec<ScriptResult>,
}

impl Harness {
    pub fn new(
        scenario: &Scenario,
        seed: Option<u64>,
        cfg: CentralConfig,
        backend: Box<dyn InferenceBackend>,
        translator: Box<dyn TranslatorClient + Send>,
        log: EventLog,
    ) -> Result<Self, SimError> {
        let front = SimFrontNode::new(scenario, seed, cfg.grid.clone())?;
        let mut central = Central::new(cfg, translator, log);
        central.connect(0);
        let mut h = Harness {
            central,
            front,
            backend,
            script: scenario.script.iter().cloned().collect(),
            duration_s: scenario.duration_s,
            link_up: true,
            to_front: FrameDecoder::new(),
            to_central: FrameDecoder::new(),
            telemetry_wire: Vec::new(),
            trace: Vec::new(),
            results: Vec::new(),
        };
        h.send_to_central(vec![SimFrontNode::hello()]);
        h.flush_central();
        Ok(h)
    }

    pub fn central(&self) -> &Central {
        &self.central
    }

    pub fn central_mut(&mut self) -> &mut Central {
        &mut self.central
    }

    pub fn into_central(self) -> Central {
        self.central
    }

    pub fn front(&self) -> &SimFrontNode {
        &self.front
    }

    pub fn trace(&self) -> &[TickTrace] {
        &self.trace
    }

    pub fn results(&self) -> &[ScriptResult] {
        &self.results
    }

    /// Every telemetry frame the front node put on the wire, concatenated.
    pub fn telemetry_wire(&self) -> &[u8] {
        &self.telemetry_wire
    }

    pub fn now_ms(&self) -> u64 {
        self.front.now_ms()
    }

    pub fn set_link(&mut self, up: bool) {
        self.link_up = up;
    }

    /// Posts an operator command at the current simulated time.
    pub fn command(&mut self, body: Value) -> CommandResponse {
        let now = self.now_ms();
        let response = self.central.operator_command(&body, now);
        self.results.push(ScriptResult {
            at_ms: now,
            body,
            response: response.clone(),
        });
        response
    }

    fn send_to_central(&mut self, msgs: Vec<WireMessage>) {
        let now = self.now_ms();
        for m in msgs {
            let bytes = encode_frame(&m).expect("front messages fit in a frame");
            if matches!(m, WireMessage::Telemetry(_)) {
                self.telemetry_wire.extend_from_slice(&bytes);
            }
            if self.link_up {
                self.to_central.feed(&bytes);
            }
        }
        while let Some(m) = self.to_central.next_message().expect("link carries well-formed frames") {
            self.central.ingest(m, now, self.backend.as_mut());
        }
    }

    fn flush_central(&mut self) {
        for m in self.central.take_outbox() {
            if self.link_up {
                self.to_front.feed(&encode_frame(&m).expect("central messages fit in a frame"));
            }
        }
        let mut replies = Vec::new();
        while let Some(m) = self.to_front.next_message().expect("link carries well-formed frames") {
            replies.extend(self.front.handle_message(&m));
        }
        if !replies.is_empty() {
            self.send_to_central(replies);
        }
    }

    /// One simulator tick.
    pub fn step(&mut self) {
        let now_ms = self.now_ms();
        while self.script.front().is_some_and(|s| (s.at_s * 1000.0).round() as u64 <= now_ms) {
            let s = self.script.pop_front().expect("checked non-empty");
            match s.action {
                ScriptAction::Command { body } => {
                    self.command(body);
                }
                ScriptAction::Sever => self.link_up = false,
                ScriptAction::Restore => self.link_up = true,
            }
        }
        self.central.poll(now_ms);
        self.flush_central();

        let out = self.front.step();
        self.trace.push(TickTrace {
            time_s: self.front.world().time,
            applied: self.front.last_applied(),
            pose: self.front.world().robot,
            link_up: self.link_up,
        });
        self.send_to_central(out);
        self.central.poll(self.now_ms());
        self.flush_central();
    }

    pub fn run_until(&mut self, t_s: f64) {
        let end_ms = (t_s * 1000.0).round() as u64;
        while self.now_ms() < end_ms {
            self.step();
        }
    }

    /// Runs to the scenario's duration.
    pub fn run(&mut self) {
        self.run_until(self.duration_s);
    }
}

use std::sync::Arc;

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::events::{EventKind, EventLog, EventRecord, ReplayState};
use super::request::{CommandResponse, OperatorRequest};
use crate::command::{
    intent_to_plan, parse_intent, translate_command, CommandError, CruiseLimits, DialogAction, DialogEvent,
    DialogPhase, DialogState, Intent, LanguageSet, PlanSegment, Prompt, TranslatorClient,
};
use crate::detection::{
    run_pipeline, DetectionSet, GridConfig, InferenceBackend, LetterboxMap, PipelineError, PixelDetection,
};
use crate::jpeg;
use crate::kinematics::{forward_kinematics, inverse_kinematics, DriveGeometry, Twist};
use crate::protocol::{NodeRole, Telemetry, WireMessage, PROTO_VERSION};

/// Language in which commands are parsed.
pub const COMMAND_LANG: &str = "en";

#[derive(Debug, Clone, PartialEq)]
pub struct CentralConfig {
    pub grid: GridConfig,
    /// Square network input frames are letterboxed into.
    pub net_size: u32,
    pub geometry: DriveGeometry,
    pub cruise: CruiseLimits,
    pub languages: LanguageSet,
    /// DriveCmd repeat interval while a timed plan runs; must stay below the
    /// front node's watchdog timeout.
    pub refresh_ms: u64,
}

impl Default for CentralConfig {
    fn default() -> Self {
        CentralConfig {
            grid: GridConfig::default(),
            net_size: 416,
            geometry: DriveGeometry::default(),
            cruise: CruiseLimits::default(),
            languages: LanguageSet::default(),
            refresh_ms: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredFrame {
    pub timestamp_ms: u64,
    pub jpeg: Arc<Vec<u8>>,
}

/// Pipeline work for one frame, runnable away from the session.
#[derive(Debug, Clone)]
pub struct FrameJob {
    pub timestamp_ms: u64,
    pub jpeg: Arc<Vec<u8>>,
    grid: GridConfig,
    net_size: u32,
}

impl FrameJob {
    pub fn run(&self, backend: &mut dyn InferenceBackend) -> Result<DetectionSet, PipelineError> {
        let fail = |m: String| PipelineError {
            timestamp_ms: self.timestamp_ms,
            source: crate::detection::DetectionError::Backend(m),
        };
        let (w, h) = jpeg::dimensions(&self.jpeg).ok_or_else(|| fail("frame is not a readable JPEG".into()))?;
        let map = LetterboxMap::new(w, h, self.net_size, self.net_size).map_err(|e| fail(e.to_string()))?;
        run_pipeline(&self.jpeg, self.timestamp_ms, backend, &self.grid, &map)
    }
}

#[derive(Debug, Clone)]
struct ActivePlan {
    segments: Vec<PlanSegment>,
    start_ms: u64,
    index: usize,
    last_sent_ms: Option<u64>,
}

impl ActivePlan {
    fn segment_end_ms(&self, index: usize) -> u64 {
        let cum: f64 = self.segments[..=index].iter().map(|s| s.duration_s).sum();
        self.start_ms + (cum * 1000.0).round() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryView {
    #[serde(flatten)]
    pub telemetry: Telemetry,
    pub received_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameView {
    pub timestamp_ms: u64,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogView {
    pub state: DialogState,
    pub prompt: Prompt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkView {
    pub connected: bool,
    /// Age of the last telemetry; null before the first one.
    pub telemetry_age_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub timestamp_ms: u64,
    pub telemetry: Option<TelemetryView>,
    pub frame: Option<FrameView>,
    pub detections: Option<DetectionSet>,
    pub dialog: DialogView,
    pub link: LinkView,
    pub log_healthy: bool,
}

impl Snapshot {
    pub fn replay_view(&self) -> ReplayState {
        ReplayState {
            telemetry: self.telemetry.as_ref().map(|t| t.telemetry.clone()),
            detections: self.detections.clone(),
        }
    }
}

/// The central node's session with the front node.
///
/// Everything is driven by explicit `now_ms` arguments so that runs under a
/// simulated clock are reproducible.
pub struct Central {
    cfg: CentralConfig,
    translator: Box<dyn TranslatorClient + Send>,
    log: EventLog,
    connected: bool,
    telemetry: Option<TelemetryView>,
    frame: Option<StoredFrame>,
    detections: Option<DetectionSet>,
    dialog: DialogState,
    next_seq: u64,
    plan: Option<ActivePlan>,
    outbox: Vec<WireMessage>,
    notices: Vec<Value>,
}

impl std::fmt::Debug for Central {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Central")
            .field("connected", &self.connected)
            .field("dialog", &self.dialog)
            .field("next_seq", &self.next_seq)
            .finish_non_exhaustive()
    }
}

impl Central {
    pub fn new(cfg: CentralConfig, translator: Box<dyn TranslatorClient + Send>, log: EventLog) -> Self {
        Central {
            cfg,
            translator,
            log,
            connected: false,
            telemetry: None,
            frame: None,
            detections: None,
            dialog: DialogState::idle(),
            next_seq: 1,
            plan: None,
            outbox: Vec::new(),
            notices: Vec::new(),
        }
    }

    pub fn config(&self) -> &CentralConfig {
        &self.cfg
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    pub fn dialog(&self) -> &DialogState {
        &self.dialog
    }

    pub fn set_dialog(&mut self, d: DialogState) {
        self.dialog = d;
    }

    pub fn latest_frame(&self) -> Option<&StoredFrame> {
        self.frame.as_ref()
    }

    pub fn latest_detections(&self) -> Option<&DetectionSet> {
        self.detections.as_ref()
    }

    fn record(&mut self, now_ms: u64, kind: EventKind, body: Value) -> EventRecord {
        self.log.append(EventRecord::new(now_ms, kind, body))
    }

    /// Records an error raised outside the session, e.g. a corrupt link.
    pub fn note_error(&mut self, now_ms: u64, source: &str, message: &str) -> EventRecord {
        self.record(now_ms, EventKind::Error, json!({"source": source, "message": message}))
    }

    /// A front node attached. The previous session, if any, is replaced.
    pub fn connect(&mut self, now_ms: u64) {
        info!("front node connected at {now_ms} ms");
        self.connected = true;
        self.plan = None;
        self.outbox.clear();
        self.outbox.push(WireMessage::Hello {
            node_role: NodeRole::Central,
            proto_version: PROTO_VERSION,
        });
    }

    pub fn disconnect(&mut self, now_ms: u64) {
        info!("front node disconnected at {now_ms} ms");
        self.connected = false;
        self.plan = None;
        self.outbox.clear();
    }

    pub fn take_outbox(&mut self) -> Vec<WireMessage> {
        std::mem::take(&mut self.outbox)
    }

    /// Dialog prompts and speech for push channels, oldest first.
    pub fn take_notices(&mut self) -> Vec<Value> {
        std::mem::take(&mut self.notices)
    }

    /// Handles one message from the front node, running the pipeline inline for frames.
    pub fn ingest(&mut self, m: WireMessage, now_ms: u64, backend: &mut dyn InferenceBackend) -> Vec<EventRecord> {
        let (job, mut records) = self.ingest_deferred(m, now_ms);
        if let Some(job) = job {
            let result = job.run(backend);
            records.extend(self.apply_detections(result, now_ms));
        }
        records
    }

    /// Like [`ingest`](Self::ingest), but hands frames back as a [`FrameJob`]
    /// to be run elsewhere and reported through [`apply_detections`](Self::apply_detections).
    pub fn ingest_deferred(&mut self, m: WireMessage, now_ms: u64) -> (Option<FrameJob>, Vec<EventRecord>) {
        match m {
            WireMessage::Telemetry(t) => {
                let body = serde_json::to_value(&t).expect("telemetry serializes");
                self.telemetry = Some(TelemetryView {
                    telemetry: t,
                    received_ms: now_ms,
                });
                (None, vec![self.record(now_ms, EventKind::Telemetry, body)])
            }
            WireMessage::FrameData {
                timestamp_ms, payload, ..
            } => {
                let jpeg = Arc::new(payload);
                self.frame = Some(StoredFrame {
                    timestamp_ms,
                    jpeg: jpeg.clone(),
                });
                let job = FrameJob {
                    timestamp_ms,
                    jpeg,
                    grid: self.cfg.grid.clone(),
                    net_size: self.cfg.net_size,
                };
                (Some(job), Vec::new())
            }
            WireMessage::Detections { timestamp_ms, items } => {
                // Detections computed on the front node.
                let set = DetectionSet {
                    timestamp_ms,
                    items: items
                        .into_iter()
                        .map(|d| PixelDetection {
                            class_id: d.class_id as usize,
                            class_name: self
                                .cfg
                                .grid
                                .class_names
                                .get(d.class_id as usize)
                                .cloned()
                                .unwrap_or_else(|| format!("class{}", d.class_id)),
                            score: d.score as f64,
                            bbox: d.bbox,
                        })
                        .collect(),
                };
                (None, self.apply_detections(Ok(set), now_ms))
            }
            WireMessage::Ping { nonce } => {
                self.outbox.push(WireMessage::Pong { nonce });
                (None, Vec::new())
            }
            WireMessage::Hello { proto_version, node_role } => {
                if proto_version != PROTO_VERSION || node_role != NodeRole::Front {
                    let body = json!({
                        "source": "link",
                        "message": format!("unexpected hello: {node_role:?} v{proto_version}"),
                    });
                    return (None, vec![self.record(now_ms, EventKind::Error, body)]);
                }
                (None, Vec::new())
            }
            WireMessage::Pong { .. } => (None, Vec::new()),
            other => {
                warn!("central ignoring {:?} from front node", other.message_type());
                (None, Vec::new())
            }
        }
    }

    /// Stores a pipeline result unless a newer frame's result is already stored.
    pub fn apply_detections(&mut self, result: Result<DetectionSet, PipelineError>, now_ms: u64) -> Vec<EventRecord> {
        match result {
            Ok(set) => {
                if self.detections.as_ref().is_some_and(|d| d.timestamp_ms >= set.timestamp_ms) {
                    debug!("dropping stale detections for frame {}", set.timestamp_ms);
                    return Vec::new();
                }
                let body = serde_json::to_value(&set).expect("detections serialize");
                self.detections = Some(set);
                vec![self.record(now_ms, EventKind::Detection, body)]
            }
            Err(e) => {
                warn!("{e}");
                let body = json!({"source": "pipeline", "timestamp_ms": e.timestamp_ms, "message": e.to_string()});
                vec![self.record(now_ms, EventKind::Error, body)]
            }
        }
    }

    fn emit(&mut self, m: WireMessage, now_ms: u64) {
        let m = match m {
            WireMessage::DriveCmd { linear, angular, .. } => {
                let seq = self.take_seq();
                WireMessage::DriveCmd { linear, angular, seq }
            }
            WireMessage::StopCmd { .. } => WireMessage::StopCmd { seq: self.take_seq() },
            other => other,
        };
        let body = json!({"sent": serde_json::to_value(&m).expect("wire messages serialize")});
        self.record(now_ms, EventKind::Command, body);
        self.outbox.push(m);
    }

    fn take_seq(&mut self) -> u64 {
        let s = self.next_seq;
        self.next_seq += 1;
        s
    }

    fn drive(&mut self, t: Twist, now_ms: u64) {
        self.emit(
            WireMessage::DriveCmd {
                linear: t.linear as f32,
                angular: t.angular as f32,
                seq: 0,
            },
            now_ms,
        );
    }

    fn stop(&mut self, now_ms: u64) {
        self.plan = None;
        self.emit(WireMessage::StopCmd { seq: 0 }, now_ms);
    }

    /// Emits whatever the running plan owes at `now_ms`: the segment's
    /// DriveCmd (repeated every `refresh_ms`) and the final StopCmd.
    pub fn poll(&mut self, now_ms: u64) {
        loop {
            let Some(plan) = self.plan.as_mut() else { return };
            if plan.index >= plan.segments.len() {
                self.stop(now_ms);
                return;
            }
            let end = plan.segment_end_ms(plan.index);
            if now_ms >= end {
                plan.index += 1;
                plan.last_sent_ms = None;
                continue;
            }
            let due = plan.last_sent_ms.is_none_or(|t| now_ms >= t + self.cfg.refresh_ms);
            if due {
                plan.last_sent_ms = Some(now_ms);
                let twist = plan.segments[plan.index].twist;
                self.drive(twist, now_ms);
            }
            return;
        }
    }

    pub fn has_active_plan(&self) -> bool {
        self.plan.is_some()
    }

    /// Handles one operator request.
    pub fn operator_command(&mut self, body: &Value, now_ms: u64) -> CommandResponse {
        let req = match OperatorRequest::from_json(body) {
            Ok(r) => r,
            Err(e) => return CommandResponse::error(400, "BadRequest", e),
        };
        if !self.connected {
            return CommandResponse::error(503, "NoFrontSession", "no front node is connected");
        }
        self.record(now_ms, EventKind::Command, json!({"request": body}));
        let resp = match req {
            OperatorRequest::Stop => {
                self.stop(now_ms);
                CommandResponse::ok(json!({"status": "stopped"}))
            }
            OperatorRequest::Drive { linear, angular } => {
                self.plan = None;
                let t = forward_kinematics(inverse_kinematics(Twist::new(linear, angular), &self.cfg.geometry), &self.cfg.geometry);
                self.drive(t, now_ms);
                CommandResponse::ok(json!({"status": "driving", "twist": t}))
            }
            OperatorRequest::Transcript { text, lang } => {
                let detected_lang = match (&self.dialog.phase, lang) {
                    (_, Some(l)) => l,
                    (DialogPhase::Ready { source, .. }, None) => source.clone(),
                    (_, None) => self
                        .translator
                        .detect(&text)
                        .map(|(l, _)| l)
                        .unwrap_or_else(|_| COMMAND_LANG.to_string()),
                };
                self.dialog_event(DialogEvent::TranscriptReceived { text, detected_lang }, now_ms)
            }
            OperatorRequest::Dialog(e) => self.dialog_event(e, now_ms),
        };
        if !resp.is_ok() {
            self.record(now_ms, EventKind::Error, json!({"source": "command", "response": resp.body}));
        }
        resp
    }

    fn dialog_event(&mut self, event: DialogEvent, now_ms: u64) -> CommandResponse {
        let (next, action) = self.dialog.advance(&event, &self.cfg.languages);
        self.dialog = next;
        let body = json!({"event": event, "state": self.dialog, "action": action});
        self.record(now_ms, EventKind::Dialog, body);
        let prompt = self.dialog.current_prompt(&self.cfg.languages);
        self.notices.push(json!({"type": "dialog", "state": self.dialog, "prompt": prompt, "action": action}));
        match action {
            DialogAction::TranslateAndDispatch { transcript, source, target } => {
                self.dispatch(&transcript, &source, &target, now_ms)
            }
            DialogAction::Prompt(p) | DialogAction::Reprompt(p) => {
                CommandResponse::ok(json!({"dialog": self.dialog, "prompt": p}))
            }
            DialogAction::None => CommandResponse::ok(json!({"dialog": self.dialog, "prompt": prompt})),
        }
    }

    fn command_error(e: CommandError) -> CommandResponse {
        CommandResponse::error(422, e.kind(), e.to_string())
    }

    /// Speech in `target`, falling back to English when no translation exists.
    fn say(&mut self, english: &str, target: &str, now_ms: u64) -> Value {
        let (lang, text, translated) = match translate_command(english, COMMAND_LANG, target, self.translator.as_ref()) {
            Ok(t) => (target.to_string(), t, true),
            Err(e) => {
                warn!("{e}; speaking English");
                (COMMAND_LANG.to_string(), english.to_string(), target == COMMAND_LANG)
            }
        };
        self.emit(WireMessage::Speak { lang: lang.clone(), text: text.clone() }, now_ms);
        let speak = json!({"lang": lang, "text": text, "translated": translated});
        self.notices.push(json!({"type": "speak", "speak": speak}));
        speak
    }

    fn dispatch(&mut self, transcript: &str, source: &str, target: &str, now_ms: u64) -> CommandResponse {
        let english = match translate_command(transcript, source, COMMAND_LANG, self.translator.as_ref()) {
            Ok(t) => t,
            Err(e) => return Self::command_error(e),
        };
        let intent = match parse_intent(&english) {
            Ok(i) => i,
            Err(e) => return Self::command_error(e),
        };
        let mut body = json!({"intent": intent, "english": english, "dialog": self.dialog});
        match &intent {
            Intent::Stop => self.stop(now_ms),
            Intent::Drive { .. } | Intent::Turn { .. } => {
                let segments = intent_to_plan(&intent, &self.cfg.geometry, &self.cfg.cruise);
                body["plan"] = serde_json::to_value(&segments).expect("plans serialize");
                self.plan = Some(ActivePlan {
                    segments,
                    start_ms: now_ms,
                    index: 0,
                    last_sent_ms: None,
                });
                self.poll(now_ms);
            }
            Intent::QueryObjects => {
                let set = self.detections.clone().unwrap_or_else(|| DetectionSet::empty(0));
                let names: Vec<String> = set.items.iter().map(|d| d.class_name.clone()).collect();
                let sentence = if names.is_empty() {
                    "i see nothing".to_string()
                } else {
                    format!("i see {}", names.join(", "))
                };
                body["objects"] = json!(names);
                body["detections"] = serde_json::to_value(&set).expect("detections serialize");
                body["speak"] = self.say(&sentence, target, now_ms);
            }
            Intent::Speak { text } => {
                let text = text.clone();
                body["speak"] = self.say(&text, target, now_ms);
            }
        }
        CommandResponse::ok(body)
    }

    pub fn snapshot(&self, now_ms: u64) -> Snapshot {
        Snapshot {
            timestamp_ms: now_ms,
            telemetry: self.telemetry.clone(),
            frame: self.frame.as_ref().map(|f| FrameView {
                timestamp_ms: f.timestamp_ms,
                bytes: f.jpeg.len(),
            }),
            detections: self.detections.clone(),
            dialog: DialogView {
                state: self.dialog.clone(),
                prompt: self.dialog.current_prompt(&self.cfg.languages),
            },
            link: LinkView {
                connected: self.connected,
                telemetry_age_ms: self.telemetry.as_ref().map(|t| now_ms.saturating_sub(t.received_ms)),
            },
            log_healthy: self.log.healthy(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::command::StubTranslator;
    use crate::detection::{DetectionTensor, DetectionError, OracleBackend, PixelBox};
    use crate::kinematics::Pose;
    use crate::protocol::{DetectionItem, FrameEncoding};
    use crate::sim::{render_frame, Obstacle, Rect, SimCamera, World};

    fn translator() -> Box<StubTranslator> {
        Box::new(StubTranslator::parse(include_str!("../../../../data/phrases.tsv")).unwrap())
    }

    fn central() -> Central {
        let mut c = Central::new(CentralConfig::default(), translator(), EventLog::memory());
        c.connect(0);
        c.take_outbox();
        c
    }

    fn frame_of(obstacles: Vec<Obstacle>, ts: u64) -> WireMessage {
        let w = World::new(Pose::default(), 0.15, obstacles, Rect::new(-5.0, -5.0, 5.0, 5.0).unwrap(), 0).unwrap();
        WireMessage::FrameData {
            timestamp_ms: ts,
            encoding: FrameEncoding::Jpeg,
            payload: render_frame(&w, &SimCamera::default(), &GridConfig::default()),
        }
    }

    fn person() -> Obstacle {
        Obstacle { label: "person".into(), rect: Rect::new(2.0, -0.2, 2.3, 0.2).unwrap() }
    }

    fn drive_seqs(msgs: &[WireMessage]) -> Vec<u64> {
        msgs.iter().filter_map(|m| m.seq()).collect()
    }

    #[test]
    fn frame_with_one_object_stores_it() {
        let mut c = central();
        let recs = c.ingest(frame_of(vec![person()], 100), 120, &mut OracleBackend);
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].kind, EventKind::Detection);
        let d = c.latest_detections().unwrap();
        assert_eq!(d.timestamp_ms, 100);
        assert_eq!(d.class_names(), vec!["person"]);
    }

    #[test]
    fn telemetry_is_stored() {
        let mut c = central();
        let t = Telemetry { pose: Pose::new(1.0, 2.0, 0.5), battery_pct: 100, link_age_ms: 0, seq: 1 };
        let recs = c.ingest(WireMessage::Telemetry(t.clone()), 10, &mut OracleBackend);
        assert_eq!(recs[0].kind, EventKind::Telemetry);
        assert_eq!(c.snapshot(10).telemetry.unwrap().telemetry, t);
    }

    struct Garbage;
    impl InferenceBackend for Garbage {
        fn infer(&mut self, _: &[u8], _: &GridConfig) -> Result<DetectionTensor, DetectionError> {
            Err(DetectionError::MalformedTensor("value 3.0 out of range".into()))
        }
    }

    #[test]
    fn backend_failure_keeps_previous_detections() {
        let mut c = central();
        c.ingest(frame_of(vec![person()], 100), 100, &mut OracleBackend);
        let recs = c.ingest(frame_of(vec![], 200), 200, &mut Garbage);
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].kind, EventKind::Error);
        assert_eq!(c.latest_detections().unwrap().timestamp_ms, 100);
        assert_eq!(c.latest_frame().unwrap().timestamp_ms, 200);
    }

    #[test]
    fn stale_results_are_dropped() {
        let mut c = central();
        let (old, _) = c.ingest_deferred(frame_of(vec![person()], 100), 100);
        let (new, _) = c.ingest_deferred(frame_of(vec![], 200), 200);
        let new_res = new.unwrap().run(&mut OracleBackend);
        assert_eq!(c.apply_detections(new_res, 210).len(), 1);
        let old_res = old.unwrap().run(&mut OracleBackend);
        assert!(c.apply_detections(old_res, 220).is_empty());
        assert_eq!(c.latest_detections().unwrap().timestamp_ms, 200);
    }

    #[test]
    fn timed_drive_plan() {
        let mut c = central();
        c.set_dialog(DialogState::ready("en", "en"));
        let r = c.operator_command(&json!({"transcript": "move forward 1 meter"}), 1000);
        assert_eq!(r.status, 200, "{:?}", r.body);
        let first = c.take_outbox();
        assert_eq!(first, vec![WireMessage::DriveCmd { linear: 0.2, angular: 0.0, seq: 1 }]);
        let mut all = first;
        for t in (1050..=6000).step_by(50) {
            c.poll(t);
            let out = c.take_outbox();
            if t < 6000 {
                assert!(out.iter().all(|m| matches!(m, WireMessage::DriveCmd { linear, .. } if *linear == 0.2)), "{t}: {out:?}");
            } else {
                assert!(matches!(out.last(), Some(WireMessage::StopCmd { .. })), "{out:?}");
            }
            all.extend(out);
        }
        assert!(!c.has_active_plan());
        let seqs = drive_seqs(&all);
        assert!(seqs.windows(2).all(|w| w[1] > w[0]));
        // 25 DriveCmds (every 200 ms over 5 s) then one StopCmd.
        assert_eq!(all.len(), 26);
    }

    #[test]
    fn stop_is_immediate_and_cancels_plan() {
        let mut c = central();
        c.set_dialog(DialogState::ready("en", "en"));
        c.operator_command(&json!({"transcript": "turn left"}), 0);
        c.take_outbox();
        let r = c.operator_command(&json!({"stop": true}), 100);
        assert!(r.is_ok());
        assert!(matches!(c.take_outbox().as_slice(), [WireMessage::StopCmd { seq: 2 }]));
        assert!(!c.has_active_plan());
    }

    #[test]
    fn query_objects_lists_classes_and_speaks() {
        let mut c = central();
        c.set_dialog(DialogState::ready("en", "en"));
        let items = vec![
            DetectionItem { class_id: 0, score: 0.9, bbox: PixelBox::from([1, 2, 3, 4]) },
            DetectionItem { class_id: 56, score: 0.8, bbox: PixelBox::from([5, 6, 7, 8]) },
        ];
        c.ingest(WireMessage::Detections { timestamp_ms: 5, items }, 5, &mut OracleBackend);
        let r = c.operator_command(&json!({"transcript": "what do you see"}), 10);
        assert_eq!(r.body["objects"], json!(["person", "chair"]));
        let out = c.take_outbox();
        assert_eq!(out, vec![WireMessage::Speak { lang: "en".into(), text: "i see person, chair".into() }]);
    }

    #[test]
    fn unrecognized_is_422_and_sends_nothing() {
        let mut c = central();
        c.set_dialog(DialogState::ready("en", "en"));
        let r = c.operator_command(&json!({"transcript": "open the pod bay doors"}), 0);
        assert_eq!(r.status, 422);
        assert_eq!(r.body["error"]["kind"], "UnrecognizedCommand");
        assert!(c.take_outbox().is_empty());
    }

    #[test]
    fn no_session_is_503_and_silent() {
        let mut c = Central::new(CentralConfig::default(), translator(), EventLog::memory());
        for body in [json!({"stop": true}), json!({"drive": {"linear": 0.1, "angular": 0}}), json!({"transcript": "stop"})] {
            assert_eq!(c.operator_command(&body, 0).status, 503);
        }
        assert!(c.take_outbox().is_empty());
        assert_eq!(c.operator_command(&json!({"bogus": 1}), 0).status, 400);
    }

    #[test]
    fn translated_dialog_flow() {
        let mut c = central();
        let r = c.operator_command(&json!({"transcript": "आगे बढ़ो"}), 0);
        assert_eq!(r.body["prompt"]["kind"], "confirm_source");
        assert_eq!(r.body["dialog"]["phase"], "AwaitSourceConfirm");
        c.operator_command(&json!({"dialog": {"ack": true}}), 10);
        let r = c.operator_command(&json!({"dialog": {"target": "en"}}), 20);
        assert_eq!(r.status, 200, "{:?}", r.body);
        assert_eq!(r.body["english"], "move forward");
        let out = c.take_outbox();
        assert!(matches!(out.as_slice(), [WireMessage::DriveCmd { .. }]));
        assert_eq!(c.dialog().phase_name(), "Ready");
        // One notice per dialog event.
        assert_eq!(c.take_notices().len(), 3);
    }

    #[test]
    fn snapshot_views() {
        let mut c = Central::new(CentralConfig::default(), translator(), EventLog::memory());
        let s = c.snapshot(0);
        assert!(s.telemetry.is_none() && s.frame.is_none() && s.detections.is_none());
        assert_eq!(s.link.telemetry_age_ms, None);
        let v = serde_json::to_value(&s).unwrap();
        assert!(v["telemetry"].is_null() && v["frame"].is_null() && v["detections"].is_null());

        c.connect(0);
        let t = Telemetry { pose: Pose::default(), battery_pct: 100, link_age_ms: 0, seq: 1 };
        c.ingest(WireMessage::Telemetry(t), 1000, &mut OracleBackend);
        c.ingest(frame_of(vec![], 990), 1000, &mut OracleBackend);
        let s = c.snapshot(3000);
        assert_eq!(s.frame.unwrap().timestamp_ms, 990);
        assert_eq!(s.telemetry.unwrap().received_ms, 1000);
        assert_eq!(s.link.telemetry_age_ms, Some(2000));
    }

    #[test]
    fn ping_gets_pong() {
        let mut c = central();
        c.ingest(WireMessage::Ping { nonce: 9 }, 0, &mut OracleBackend);
        assert_eq!(c.take_outbox(), vec![WireMessage::Pong { nonce: 9 }]);
    }
}

use std::collections::VecDeque;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::error;
use serde::{Deserialize, Serialize};

use crate::detection::DetectionSet;
use crate::protocol::Telemetry;

/// In-memory records kept for `/events` queries.
pub const DEFAULT_MEMORY_CAP: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Telemetry,
    Detection,
    Command,
    Dialog,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub timestamp_ms: u64,
    pub kind: EventKind,
    pub body: serde_json::Value,
}

impl EventRecord {
    pub fn new(timestamp_ms: u64, kind: EventKind, body: serde_json::Value) -> Self {
        EventRecord {
            timestamp_ms,
            kind,
            body,
        }
    }

    pub fn to_json_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("event records always serialize");
        s.push('\n');
        s
    }
}

/// Append-only event log: a JSONL sink plus a bounded in-memory tail.
/// Write failures mark the log unhealthy; records are still kept in memory.
pub struct EventLog {
    sink: Option<Box<dyn Write + Send>>,
    path: Option<PathBuf>,
    records: VecDeque<EventRecord>,
    cap: usize,
    last_ts: u64,
    error: Option<String>,
}

impl std::fmt::Debug for EventLog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EventLog")
            .field("path", &self.path)
            .field("records", &self.records.len())
            .field("error", &self.error)
            .finish()
    }
}

pub fn log_file_name(start_ms: u64) -> String {
    format!("events-{start_ms}.jsonl")
}

impl EventLog {
    pub fn memory() -> Self {
        EventLog {
            sink: None,
            path: None,
            records: VecDeque::new(),
            cap: DEFAULT_MEMORY_CAP,
            last_ts: 0,
            error: None,
        }
    }

    /// Opens (appending) `events-<start_ms>.jsonl` under `dir`.
    pub fn open(dir: &Path, start_ms: u64) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(log_file_name(start_ms));
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        let mut log = EventLog::with_sink(Box::new(file));
        log.path = Some(path);
        Ok(log)
    }

    pub fn with_sink(sink: Box<dyn Write + Send>) -> Self {
        EventLog {
            sink: Some(sink),
            ..EventLog::memory()
        }
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn healthy(&self) -> bool {
        self.error.is_none()
    }

    pub fn error(&self) -> Option<&str> {
        self.error.as_deref()
    }

    /// Appends and flushes. Timestamps are clamped so they never decrease.
    pub fn append(&mut self, mut r: EventRecord) -> EventRecord {
        r.timestamp_ms = r.timestamp_ms.max(self.last_ts);
        self.last_ts = r.timestamp_ms;
        if let Some(sink) = self.sink.as_mut() {
            let line = r.to_json_line();
            if let Err(e) = sink.write_all(line.as_bytes()).and_then(|_| sink.flush()) {
                if self.error.is_none() {
                    error!("event log write failed: {e}");
                }
                self.error = Some(e.to_string());
            }
        }
        if self.records.len() == self.cap {
            self.records.pop_front();
        }
        self.records.push_back(r.clone());
        r
    }

    pub fn records(&self) -> impl Iterator<Item = &EventRecord> {
        self.records.iter()
    }

    /// Records with `timestamp_ms >= since`, as JSONL.
    pub fn since_jsonl(&self, since: u64) -> String {
        self.records
            .iter()
            .filter(|r| r.timestamp_ms >= since)
            .map(EventRecord::to_json_line)
            .collect()
    }
}

/// What a log replays to: the latest telemetry and detections.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplayState {
    pub telemetry: Option<Telemetry>,
    pub detections: Option<DetectionSet>,
}

impl ReplayState {
    pub fn apply(&mut self, r: &EventRecord) -> Result<(), serde_json::Error> {
        match r.kind {
            EventKind::Telemetry => self.telemetry = Some(serde_json::from_value(r.body.clone())?),
            EventKind::Detection => self.detections = Some(serde_json::from_value(r.body.clone())?),
            _ => {}
        }
        Ok(())
    }
}

pub fn replay<'a, I: IntoIterator<Item = &'a EventRecord>>(records: I) -> Result<ReplayState, serde_json::Error> {
    let mut s = ReplayState::default();
    for r in records {
        s.apply(r)?;
    }
    Ok(s)
}

pub fn parse_jsonl(text: &str) -> Result<Vec<EventRecord>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

pub fn replay_jsonl(text: &str) -> Result<ReplayState, serde_json::Error> {
    replay(&parse_jsonl(text)?)
}

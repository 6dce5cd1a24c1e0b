//! Central-node session logic, independent of any network runtime.

mod events;
mod request;
mod session;

pub use events::{
    log_file_name, parse_jsonl, replay, replay_jsonl, EventKind, EventLog, EventRecord, ReplayState,
    DEFAULT_MEMORY_CAP,
};
pub use request::{CommandResponse, OperatorRequest};
pub use session::{
    Central, CentralConfig, DialogView, FrameJob, FrameView, LinkView, Snapshot, StoredFrame, TelemetryView,
    COMMAND_LANG,
};

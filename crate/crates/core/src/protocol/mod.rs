//! Framed binary protocol between the front and central nodes.

mod codec;
mod message;

pub use codec::{
    decode_frame, encode_frame, CorruptFrame, CorruptReason, Decoded, EncodeError, FrameDecoder,
    CRC_LEN, HEADER_LEN, MAGIC, MAX_PAYLOAD, VERSION,
};
pub use message::{
    DetectionItem, FrameEncoding, MessageType, NodeRole, Telemetry, WireMessage, PROTO_VERSION,
};

/// Front-node listener port.
pub const DEFAULT_AGENT_PORT: u16 = 7071;
/// Central operator HTTP port.
pub const DEFAULT_HTTP_PORT: u16 = 8080;

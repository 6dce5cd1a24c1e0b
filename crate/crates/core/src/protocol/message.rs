use serde::{Deserialize, Serialize};

use crate::detection::PixelBox;
use crate::kinematics::Pose;

pub const PROTO_VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Front,
    Central,
}

impl NodeRole {
    pub(crate) fn to_byte(self) -> u8 {
        match self {
            NodeRole::Front => 0x01,
            NodeRole::Central => 0x02,
        }
    }

    pub(crate) fn from_byte(b: u8) -> Option<Self> {
        match b {
            0x01 => Some(NodeRole::Front),
            0x02 => Some(NodeRole::Central),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameEncoding {
    Jpeg,
}

impl FrameEncoding {
    pub(crate) fn to_byte(self) -> u8 {
        match self {
            FrameEncoding::Jpeg => 0x01,
        }
    }

    pub(crate) fn from_byte(b: u8) -> Option<Self> {
        (b == 0x01).then_some(FrameEncoding::Jpeg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub pose: Pose,
    pub battery_pct: u8,
    pub link_age_ms: u32,
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionItem {
    pub class_id: u16,
    pub score: f32,
    pub bbox: PixelBox,
}

/// Every message exchanged between the front and central nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WireMessage {
    Hello { node_role: NodeRole, proto_version: u8 },
    Ping { nonce: u64 },
    Pong { nonce: u64 },
    DriveCmd { linear: f32, angular: f32, seq: u64 },
    StopCmd { seq: u64 },
    Telemetry(Telemetry),
    FrameData {
        timestamp_ms: u64,
        encoding: FrameEncoding,
        #[serde(skip)]
        payload: Vec<u8>,
    },
    Detections { timestamp_ms: u64, items: Vec<DetectionItem> },
    Speak { lang: String, text: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MessageType {
    Hello = 0x01,
    Ping = 0x02,
    Pong = 0x03,
    DriveCmd = 0x10,
    StopCmd = 0x11,
    Telemetry = 0x20,
    FrameData = 0x30,
    Detections = 0x40,
    Speak = 0x50,
}

impl MessageType {
    pub const ALL: [MessageType; 9] = [
        MessageType::Hello,
        MessageType::Ping,
        MessageType::Pong,
        MessageType::DriveCmd,
        MessageType::StopCmd,
        MessageType::Telemetry,
        MessageType::FrameData,
        MessageType::Detections,
        MessageType::Speak,
    ];

    pub fn from_byte(b: u8) -> Option<Self> {
        MessageType::ALL.into_iter().find(|t| *t as u8 == b)
    }
}

impl WireMessage {
    pub fn message_type(&self) -> MessageType {
        match self {
            WireMessage::Hello { .. } => MessageType::Hello,
            WireMessage::Ping { .. } => MessageType::Ping,
            WireMessage::Pong { .. } => MessageType::Pong,
            WireMessage::DriveCmd { .. } => MessageType::DriveCmd,
            WireMessage::StopCmd { .. } => MessageType::StopCmd,
            WireMessage::Telemetry(_) => MessageType::Telemetry,
            WireMessage::FrameData { .. } => MessageType::FrameData,
            WireMessage::Detections { .. } => MessageType::Detections,
            WireMessage::Speak { .. } => MessageType::Speak,
        }
    }

    /// Sequence number for the message types that carry one.
    pub fn seq(&self) -> Option<u64> {
        match self {
            WireMessage::DriveCmd { seq, .. } | WireMessage::StopCmd { seq } => Some(*seq),
            WireMessage::Telemetry(t) => Some(t.seq),
            _ => None,
        }
    }
}

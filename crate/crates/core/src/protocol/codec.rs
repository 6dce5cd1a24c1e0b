//! Frame layout (all integers little-endian):
//!
//! ```text
//! 0x50 0x42 | version u8 | msg_type u8 | length u32 | payload[length] | crc32 u32
//! ```
//!
//! The CRC is CRC-32/IEEE over everything from the magic through the payload.

use thiserror::Error;

use super::message::{
    DetectionItem, FrameEncoding, MessageType, NodeRole, Telemetry, WireMessage,
};
use crate::detection::PixelBox;
use crate::kinematics::Pose;

pub const MAGIC: [u8; 2] = [0x50, 0x42];
pub const VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 8;
pub const CRC_LEN: usize = 4;
pub const MAX_PAYLOAD: usize = 16 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("payload of {0} bytes exceeds the 16 MiB frame limit")]
    Oversize(usize),
    #[error("{field} is {len} bytes, above the {max}-byte field limit")]
    FieldTooLong {
        field: &'static str,
        len: usize,
        max: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CorruptReason {
    BadMagic,
    BadVersion,
    Oversize,
    BadCrc,
    BadPayload,
}

impl CorruptReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            CorruptReason::BadMagic => "bad_magic",
            CorruptReason::BadVersion => "bad_version",
            CorruptReason::Oversize => "oversize",
            CorruptReason::BadCrc => "bad_crc",
            CorruptReason::BadPayload => "bad_payload",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("corrupt frame: {}{}", reason.as_str(), detail.as_deref().map(|d| format!(" ({d})")).unwrap_or_default())]
pub struct CorruptFrame {
    pub reason: CorruptReason,
    pub detail: Option<String>,
}

impl CorruptFrame {
    fn new(reason: CorruptReason) -> Self {
        CorruptFrame {
            reason,
            detail: None,
        }
    }

    fn payload(detail: impl Into<String>) -> Self {
        CorruptFrame {
            reason: CorruptReason::BadPayload,
            detail: Some(detail.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decoded {
    Frame { message: WireMessage, consumed: usize },
    NeedMoreData,
}

pub fn encode_frame(m: &WireMessage) -> Result<Vec<u8>, EncodeError> {
    let payload = encode_payload(m)?;
    if payload.len() > MAX_PAYLOAD {
        return Err(EncodeError::Oversize(payload.len()));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + CRC_LEN);
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(m.message_type() as u8);
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(&payload);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

/// Decodes the first frame in `buf`. Header fields are validated as soon as
/// they are buffered, so a bad magic or version fails before the frame is complete.
pub fn decode_frame(buf: &[u8]) -> Result<Decoded, CorruptFrame> {
    for (i, b) in MAGIC.iter().enumerate() {
        match buf.get(i) {
            None => return Ok(Decoded::NeedMoreData),
            Some(x) if x != b => return Err(CorruptFrame::new(CorruptReason::BadMagic)),
            _ => {}
        }
    }
    match buf.get(2) {
        None => return Ok(Decoded::NeedMoreData),
        Some(&v) if v != VERSION => return Err(CorruptFrame::new(CorruptReason::BadVersion)),
        _ => {}
    }
    if buf.len() < HEADER_LEN {
        return Ok(Decoded::NeedMoreData);
    }
    let length = u32::from_le_bytes(buf[4..8].try_into().unwrap()) as usize;
    if length > MAX_PAYLOAD {
        return Err(CorruptFrame::new(CorruptReason::Oversize));
    }
    let total = HEADER_LEN + length + CRC_LEN;
    if buf.len() < total {
        return Ok(Decoded::NeedMoreData);
    }
    let body_end = HEADER_LEN + length;
    let expected = u32::from_le_bytes(buf[body_end..total].try_into().unwrap());
    if crc32fast::hash(&buf[..body_end]) != expected {
        return Err(CorruptFrame::new(CorruptReason::BadCrc));
    }
    let msg_type = MessageType::from_byte(buf[3])
        .ok_or_else(|| CorruptFrame::payload(format!("unknown message type 0x{:02x}", buf[3])))?;
    let message = decode_payload(msg_type, &buf[HEADER_LEN..body_end])?;
    Ok(Decoded::Frame {
        message,
        consumed: total,
    })
}

fn put_text(out: &mut Vec<u8>, field: &'static str, s: &str) -> Result<(), EncodeError> {
    let len = s.len();
    if len > u16::MAX as usize {
        return Err(EncodeError::FieldTooLong {
            field,
            len,
            max: u16::MAX as usize,
        });
    }
    out.extend_from_slice(&(len as u16).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
    Ok(())
}

fn encode_payload(m: &WireMessage) -> Result<Vec<u8>, EncodeError> {
    let mut p = Vec::new();
    match m {
        WireMessage::Hello {
            node_role,
            proto_version,
        } => {
            p.push(node_role.to_byte());
            p.push(*proto_version);
        }
        WireMessage::Ping { nonce } | WireMessage::Pong { nonce } => {
            p.extend_from_slice(&nonce.to_le_bytes())
        }
        WireMessage::DriveCmd {
            linear,
            angular,
            seq,
        } => {
            p.extend_from_slice(&linear.to_le_bytes());
            p.extend_from_slice(&angular.to_le_bytes());
            p.extend_from_slice(&seq.to_le_bytes());
        }
        WireMessage::StopCmd { seq } => p.extend_from_slice(&seq.to_le_bytes()),
        WireMessage::Telemetry(t) => {
            for v in [t.pose.x, t.pose.y, t.pose.theta] {
                p.extend_from_slice(&v.to_le_bytes());
            }
            p.push(t.battery_pct);
            p.extend_from_slice(&t.link_age_ms.to_le_bytes());
            p.extend_from_slice(&t.seq.to_le_bytes());
        }
        WireMessage::FrameData {
            timestamp_ms,
            encoding,
            payload,
        } => {
            let room = MAX_PAYLOAD - 13;
            if payload.len() > room {
                return Err(EncodeError::Oversize(payload.len() + 13));
            }
            p.reserve(13 + payload.len());
            p.extend_from_slice(&timestamp_ms.to_le_bytes());
            p.push(encoding.to_byte());
            p.extend_from_slice(&(payload.len() as u32).to_le_bytes());
            p.extend_from_slice(payload);
        }
        WireMessage::Detections {
            timestamp_ms,
            items,
        } => {
            if items.len() > u16::MAX as usize {
                return Err(EncodeError::FieldTooLong {
                    field: "detection items",
                    len: items.len(),
                    max: u16::MAX as usize,
                });
            }
            p.extend_from_slice(&timestamp_ms.to_le_bytes());
            p.extend_from_slice(&(items.len() as u16).to_le_bytes());
            for it in items {
                p.extend_from_slice(&it.class_id.to_le_bytes());
                p.extend_from_slice(&it.score.to_le_bytes());
                for v in it.bbox.to_array() {
                    p.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        WireMessage::Speak { lang, text } => {
            put_text(&mut p, "lang", lang)?;
            put_text(&mut p, "text", text)?;
        }
    }
    Ok(p)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CorruptFrame> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| CorruptFrame::payload("payload truncated"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, CorruptFrame> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CorruptFrame> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, CorruptFrame> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CorruptFrame> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32, CorruptFrame> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, CorruptFrame> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn text(&mut self) -> Result<String, CorruptFrame> {
        let n = self.u16()? as usize;
        let raw = self.take(n)?;
        String::from_utf8(raw.to_vec()).map_err(|_| CorruptFrame::payload("text is not UTF-8"))
    }

    fn finish(self) -> Result<(), CorruptFrame> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(CorruptFrame::payload(format!(
                "{} trailing payload bytes",
                self.buf.len() - self.pos
            )))
        }
    }
}

fn decode_payload(t: MessageType, payload: &[u8]) -> Result<WireMessage, CorruptFrame> {
    let mut r = Reader {
        buf: payload,
        pos: 0,
    };
    let msg = match t {
        MessageType::Hello => {
            let role = r.u8()?;
            let node_role = NodeRole::from_byte(role)
                .ok_or_else(|| CorruptFrame::payload(format!("unknown node role {role}")))?;
            WireMessage::Hello {
                node_role,
                proto_version: r.u8()?,
            }
        }
        MessageType::Ping => WireMessage::Ping { nonce: r.u64()? },
        MessageType::Pong => WireMessage::Pong { nonce: r.u64()? },
        MessageType::DriveCmd => WireMessage::DriveCmd {
            linear: r.f32()?,
            angular: r.f32()?,
            seq: r.u64()?,
        },
        MessageType::StopCmd => WireMessage::StopCmd { seq: r.u64()? },
        MessageType::Telemetry => {
            let pose = Pose {
                x: r.f64()?,
                y: r.f64()?,
                theta: r.f64()?,
            };
            let battery_pct = r.u8()?;
            if battery_pct > 100 {
                return Err(CorruptFrame::payload(format!("battery {battery_pct}% above 100")));
            }
            WireMessage::Telemetry(Telemetry {
                pose,
                battery_pct,
                link_age_ms: r.u32()?,
                seq: r.u64()?,
            })
        }
        MessageType::FrameData => {
            let timestamp_ms = r.u64()?;
            let enc = r.u8()?;
            let encoding = FrameEncoding::from_byte(enc)
                .ok_or_else(|| CorruptFrame::payload(format!("unknown frame encoding {enc}")))?;
            let n = r.u32()? as usize;
            WireMessage::FrameData {
                timestamp_ms,
                encoding,
                payload: r.take(n)?.to_vec(),
            }
        }
        MessageType::Detections => {
            let timestamp_ms = r.u64()?;
            let n = r.u16()? as usize;
            let mut items = Vec::with_capacity(n);
            for _ in 0..n {
                items.push(DetectionItem {
                    class_id: r.u16()?,
                    score: r.f32()?,
                    bbox: PixelBox {
                        x0: r.u32()?,
                        y0: r.u32()?,
                        x1: r.u32()?,
                        y1: r.u32()?,
                    },
                });
            }
            WireMessage::Detections {
                timestamp_ms,
                items,
            }
        }
        MessageType::Speak => WireMessage::Speak {
            lang: r.text()?,
            text: r.text()?,
        },
    };
    r.finish()?;
    Ok(msg)
}

/// Per-connection incremental decoder. After the first corrupt frame it
/// stays failed; the connection must be dropped.
#[derive(Debug, Default)]
pub struct FrameDecoder {
    buf: Vec<u8>,
    failed: Option<CorruptFrame>,
}

impl FrameDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn feed(&mut self, bytes: &[u8]) {
        if self.failed.is_none() {
            self.buf.extend_from_slice(bytes);
        }
    }

    pub fn buffered(&self) -> usize {
        self.buf.len()
    }

    /// Next complete message, `Ok(None)` when more bytes are needed.
    pub fn next_message(&mut self) -> Result<Option<WireMessage>, CorruptFrame> {
        if let Some(e) = &self.failed {
            return Err(e.clone());
        }
        match decode_frame(&self.buf) {
            Ok(Decoded::NeedMoreData) => Ok(None),
            Ok(Decoded::Frame { message, consumed }) => {
                self.buf.drain(..consumed);
                Ok(Some(message))
            }
            Err(e) => {
                self.buf.clear();
                self.failed = Some(e.clone());
                Err(e)
            }
        }
    }
}

//! Operator command bodies, as posted to `/command` or sent over `/ws`.
//!
//! ```text
//! {"stop": true}
//! {"drive": {"linear": 0.2, "angular": 0.0}}
//! {"transcript": "move forward 1 meter", "lang": "en"}     # lang optional
//! {"dialog": {"ack": true}} | {"dialog": {"source": "hi"}}
//! {"dialog": {"target": "en"}} | {"dialog": "reset"}
//! ```

use serde::Serialize;
use serde_json::{json, Value};

use crate::command::DialogEvent;

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorRequest {
    Stop,
    Drive { linear: f64, angular: f64 },
    Transcript { text: String, lang: Option<String> },
    Dialog(DialogEvent),
}

fn finite(v: &Value, what: &str) -> Result<f64, String> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| format!("{what} must be a finite number"))
}

fn string(v: &Value, what: &str) -> Result<String, String> {
    v.as_str().map(str::to_string).ok_or_else(|| format!("{what} must be a string"))
}

impl OperatorRequest {
    pub fn from_json(body: &Value) -> Result<Self, String> {
        let obj = body.as_object().ok_or("command body must be a JSON object")?;
        if obj.len() == 1 {
            if let Some(v) = obj.get("stop") {
                return match v.as_bool() {
                    Some(true) => Ok(OperatorRequest::Stop),
                    _ => Err("stop must be true".into()),
                };
            }
            if let Some(d) = obj.get("drive") {
                return Ok(OperatorRequest::Drive {
                    linear: finite(&d["linear"], "drive.linear")?,
                    angular: finite(&d["angular"], "drive.angular")?,
                });
            }
            if let Some(d) = obj.get("dialog") {
                return parse_dialog(d).map(OperatorRequest::Dialog);
            }
        }
        if let Some(t) = obj.get("transcript") {
            if obj.keys().any(|k| k != "transcript" && k != "lang") {
                return Err("transcript requests take only 'transcript' and 'lang'".into());
            }
            let lang = obj.get("lang").map(|l| string(l, "lang")).transpose()?;
            return Ok(OperatorRequest::Transcript {
                text: string(t, "transcript")?,
                lang,
            });
        }
        Err("expected one of stop, drive, transcript or dialog".into())
    }
}

fn parse_dialog(d: &Value) -> Result<DialogEvent, String> {
    if d.as_str() == Some("reset") {
        return Ok(DialogEvent::Reset);
    }
    let obj = d.as_object().filter(|o| o.len() == 1).ok_or("dialog must be \"reset\" or a one-key object")?;
    let (k, v) = obj.iter().next().expect("one key");
    match k.as_str() {
        "ack" => v.as_bool().map(DialogEvent::UserAck).ok_or_else(|| "dialog.ack must be a boolean".into()),
        "source" => string(v, "dialog.source").map(DialogEvent::SourceProvided),
        "target" => string(v, "dialog.target").map(DialogEvent::TargetProvided),
        other => Err(format!("unknown dialog event '{other}'")),
    }
}

/// HTTP-style status plus JSON body.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommandResponse {
    pub status: u16,
    pub body: Value,
}

impl CommandResponse {
    pub fn ok(body: Value) -> Self {
        CommandResponse { status: 200, body }
    }

    pub fn error(status: u16, kind: &str, message: impl Into<String>) -> Self {
        CommandResponse {
            status,
            body: json!({"error": {"kind": kind, "message": message.into()}}),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == 200
    }
}

//! Operator HTTP and WebSocket API.

use std::convert::Infallible;
use std::path::PathBuf;

use axum::body::{Body, Bytes};
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures_util::{SinkExt, StreamExt};
use sentinel_core::server::CommandResponse;
use serde_json::{json, Value};
use tokio::sync::broadcast::error::RecvError;
use tokio_stream::wrappers::WatchStream;
use tower_http::services::ServeDir;

use crate::state::AppState;

pub const MJPEG_BOUNDARY: &str = "frame";

pub fn router(state: AppState, console_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/snapshot", get(snapshot))
        .route("/detections", get(detections))
        .route("/command", post(command))
        .route("/events", get(events))
        .route("/stream", get(stream))
        .route("/ws", get(ws))
        .with_state(state);
    match console_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

fn respond(r: CommandResponse) -> Response {
    let status = StatusCode::from_u16(r.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (status, Json(r.body)).into_response()
}

async fn snapshot(State(s): State<AppState>) -> Response {
    Json(s.snapshot()).into_response()
}

async fn detections(State(s): State<AppState>) -> Response {
    let body = s.with_central(|c, _| match c.latest_detections() {
        Some(d) => serde_json::to_value(d).expect("detections serialize"),
        None => json!({"timestamp_ms": null, "items": []}),
    });
    Json(body).into_response()
}

fn parse_body(bytes: &[u8]) -> Result<Value, CommandResponse> {
    serde_json::from_slice(bytes).map_err(|e| CommandResponse::error(400, "BadRequest", format!("invalid JSON: {e}")))
}

async fn command(State(s): State<AppState>, body: Bytes) -> Response {
    match parse_body(&body) {
        Ok(v) => respond(s.command(&v)),
        Err(r) => respond(r),
    }
}

#[derive(serde::Deserialize)]
struct EventsQuery {
    since: Option<u64>,
}

async fn events(State(s): State<AppState>, Query(q): Query<EventsQuery>) -> Response {
    let text = s.with_central(|c, _| c.log().since_jsonl(q.since.unwrap_or(0)));
    ([(header::CONTENT_TYPE, "application/x-ndjson")], text).into_response()
}

pub fn mjpeg_part(jpeg: &[u8]) -> Vec<u8> {
    let mut part = format!(
        "--{MJPEG_BOUNDARY}\r\nContent-Type: image/jpeg\r\nContent-Length: {}\r\n\r\n",
        jpeg.len()
    )
    .into_bytes();
    part.extend_from_slice(jpeg);
    part.extend_from_slice(b"\r\n");
    part
}

async fn stream(State(s): State<AppState>) -> Response {
    let parts = WatchStream::new(s.subscribe_frames())
        .filter_map(|f| async move { f.map(|f| Ok::<_, Infallible>(Bytes::from(mjpeg_part(&f.jpeg)))) });
    (
        [(
            header::CONTENT_TYPE,
            format!("multipart/x-mixed-replace; boundary={MJPEG_BOUNDARY}"),
        ), (header::CACHE_CONTROL, "no-cache".to_string())],
        Body::from_stream(parts),
    )
        .into_response()
}

async fn ws(State(s): State<AppState>, upgrade: WebSocketUpgrade) -> Response {
    upgrade.on_upgrade(move |socket| ws_session(s, socket))
}

/// Pushes a full snapshot on connect, then deltas and dialog notices.
/// Inbound text frames are command bodies; each gets a `response` reply.
async fn ws_session(s: AppState, socket: WebSocket) {
    let (mut tx, mut rx) = socket.split();
    let mut pushed = s.subscribe_push();
    let hello = json!({"type": "snapshot", "data": s.snapshot()}).to_string();
    if tx.send(Message::Text(hello.into())).await.is_err() {
        return;
    }
    loop {
        tokio::select! {
            inbound = rx.next() => match inbound {
                Some(Ok(Message::Text(text))) => {
                    let r = match parse_body(text.as_bytes()) {
                        Ok(v) => s.command(&v),
                        Err(r) => r,
                    };
                    let reply = json!({"type": "response", "status": r.status, "body": r.body}).to_string();
                    if tx.send(Message::Text(reply.into())).await.is_err() {
                        break;
                    }
                }
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => {}
            },
            out = pushed.recv() => match out {
                Ok(text) => {
                    if tx.send(Message::Text(text.into())).await.is_err() {
                        break;
                    }
                }
                Err(RecvError::Lagged(_)) => continue,
                Err(RecvError::Closed) => break,
            },
        }
    }
}

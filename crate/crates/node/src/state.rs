//! Shared central-node state and the front-node session loop.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Duration;

use log::{info, warn};
use sentinel_core::detection::InferenceBackend;
use sentinel_core::protocol::{encode_frame, FrameDecoder, WireMessage};
use sentinel_core::server::{Central, CommandResponse, FrameJob, Snapshot, StoredFrame};
use serde_json::{json, Map, Value};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{broadcast, mpsc, watch, Notify};

use crate::clock::Clock;

pub type SharedBackend = Arc<Mutex<Box<dyn InferenceBackend + Send>>>;

struct Link {
    generation: u64,
    tx: mpsc::UnboundedSender<WireMessage>,
    closed: Arc<Notify>,
}

struct Inner {
    central: Mutex<Central>,
    backend: SharedBackend,
    clock: Arc<dyn Clock>,
    link: Mutex<Option<Link>>,
    generation: AtomicU64,
    frames: watch::Sender<Option<StoredFrame>>,
    jobs: watch::Sender<Option<FrameJob>>,
    push: broadcast::Sender<String>,
}

/// Handle to the central node. Cheap to clone; all clones share one session.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    // A panicked holder leaves the data usable for our purposes.
    m.lock().unwrap_or_else(|e| e.into_inner())
}

impl AppState {
    /// Must be called inside a Tokio runtime: spawns the pipeline worker.
    pub fn new(central: Central, backend: Box<dyn InferenceBackend + Send>, clock: Arc<dyn Clock>) -> Self {
        let (frames, _) = watch::channel(None);
        let (jobs, _) = watch::channel(None);
        let (push, _) = broadcast::channel(256);
        let state = AppState {
            inner: Arc::new(Inner {
                central: Mutex::new(central),
                backend: Arc::new(Mutex::new(backend)),
                clock,
                link: Mutex::new(None),
                generation: AtomicU64::new(0),
                frames,
                jobs,
                push,
            }),
        };
        tokio::spawn(pipeline_worker(state.clone()));
        state
    }

    pub fn now_ms(&self) -> u64 {
        self.inner.clock.now_ms()
    }

    /// Runs `f` on the session, then forwards any outbound messages and notices.
    pub fn with_central<R>(&self, f: impl FnOnce(&mut Central, u64) -> R) -> R {
        let mut c = lock(&self.inner.central);
        let now = self.now_ms();
        let r = f(&mut c, now);
        let out = c.take_outbox();
        let notices = c.take_notices();
        drop(c);
        if !out.is_empty() {
            if let Some(link) = lock(&self.inner.link).as_ref() {
                for m in out {
                    let _ = link.tx.send(m);
                }
            }
        }
        for n in notices {
            let _ = self.inner.push.send(n.to_string());
        }
        r
    }

    pub fn snapshot(&self) -> Snapshot {
        self.with_central(|c, now| c.snapshot(now))
    }

    pub fn command(&self, body: &Value) -> CommandResponse {
        self.with_central(|c, now| c.operator_command(body, now))
    }

    pub fn subscribe_frames(&self) -> watch::Receiver<Option<StoredFrame>> {
        self.inner.frames.subscribe()
    }

    pub fn subscribe_push(&self) -> broadcast::Receiver<String> {
        self.inner.push.subscribe()
    }

    pub fn push(&self, text: String) {
        let _ = self.inner.push.send(text);
    }

    /// Handles one inbound front message. Frames are queued for the
    /// pipeline worker; a newer frame replaces a queued one.
    pub fn ingest(&self, m: WireMessage) {
        let job = self.with_central(|c, now| c.ingest_deferred(m, now).0);
        if let Some(job) = job {
            self.inner.frames.send_replace(Some(StoredFrame {
                timestamp_ms: job.timestamp_ms,
                jpeg: job.jpeg.clone(),
            }));
            self.inner.jobs.send_replace(Some(job));
        }
    }

    fn attach(&self, tx: mpsc::UnboundedSender<WireMessage>) -> (u64, Arc<Notify>) {
        let generation = self.inner.generation.fetch_add(1, Ordering::SeqCst) + 1;
        let closed = Arc::new(Notify::new());
        let previous = lock(&self.inner.link).replace(Link {
            generation,
            tx,
            closed: closed.clone(),
        });
        if let Some(p) = previous {
            info!("replacing front session {}", p.generation);
            p.closed.notify_one();
        }
        self.with_central(|c, now| c.connect(now));
        (generation, closed)
    }

    fn detach(&self, generation: u64) {
        let mut link = lock(&self.inner.link);
        if link.as_ref().is_some_and(|l| l.generation == generation) {
            *link = None;
            drop(link);
            self.with_central(|c, now| c.disconnect(now));
        }
    }

    /// Drives timed plans.
    pub fn spawn_ticker(&self, period: Duration) -> tokio::task::JoinHandle<()> {
        let state = self.clone();
        tokio::spawn(async move {
            let mut iv = tokio::time::interval(period);
            loop {
                iv.tick().await;
                state.with_central(|c, now| c.poll(now));
            }
        })
    }

    /// Pushes changed top-level snapshot fields to `/ws` subscribers.
    pub fn spawn_snapshot_pusher(&self, period: Duration) -> tokio::task::JoinHandle<()> {
        let state = self.clone();
        tokio::spawn(async move {
            let mut iv = tokio::time::interval(period);
            let mut last = Map::new();
            loop {
                iv.tick().await;
                let Ok(Value::Object(now)) = serde_json::to_value(state.snapshot()) else {
                    continue;
                };
                let delta = snapshot_delta(&last, &now);
                if !delta.is_empty() {
                    state.push(json!({"type": "delta", "data": delta}).to_string());
                }
                last = now;
            }
        })
    }

    /// Serves one front-node connection until it closes, is corrupted, or is replaced.
    pub async fn serve_front(&self, stream: TcpStream) {
        let peer = stream.peer_addr().map(|a| a.to_string()).unwrap_or_default();
        let _ = stream.set_nodelay(true);
        let (mut rd, mut wr) = stream.into_split();
        let (tx, mut rx) = mpsc::unbounded_channel::<WireMessage>();
        let (generation, closed) = self.attach(tx);
        info!("front session {generation} from {peer}");
        let writer = tokio::spawn(async move {
            while let Some(m) = rx.recv().await {
                let bytes = match encode_frame(&m) {
                    Ok(b) => b,
                    Err(e) => {
                        warn!("dropping unencodable message: {e}");
                        continue;
                    }
                };
                if wr.write_all(&bytes).await.is_err() {
                    break;
                }
            }
        });
        let mut dec = FrameDecoder::new();
        let mut buf = vec![0u8; 64 * 1024];
        'read: loop {
            let n = tokio::select! {
                r = rd.read(&mut buf) => match r {
                    Ok(0) | Err(_) => break 'read,
                    Ok(n) => n,
                },
                _ = closed.notified() => break 'read,
            };
            dec.feed(&buf[..n]);
            loop {
                match dec.next_message() {
                    Ok(Some(m)) => self.ingest(m),
                    Ok(None) => break,
                    Err(e) => {
                        warn!("front session {generation}: {e}; dropping connection");
                        self.with_central(|c, now| c.note_error(now, "link", &e.to_string()));
                        break 'read;
                    }
                }
            }
        }
        writer.abort();
        self.detach(generation);
        info!("front session {generation} ended");
    }

    /// Accepts front nodes; a new connection replaces the current one.
    pub async fn listen_front(&self, listener: TcpListener) {
        loop {
            match listener.accept().await {
                Ok((stream, _)) => {
                    let s = self.clone();
                    tokio::spawn(async move { s.serve_front(stream).await });
                }
                Err(e) => {
                    warn!("accept failed: {e}");
                    tokio::time::sleep(Duration::from_millis(100)).await;
                }
            }
        }
    }

    /// Dials a front node, reconnecting after `retry` whenever the link drops.
    pub async fn dial_front(&self, addr: String, retry: Duration) {
        loop {
            match TcpStream::connect(&addr).await {
                Ok(stream) => self.serve_front(stream).await,
                Err(e) => warn!("connecting to front node {addr}: {e}"),
            }
            tokio::time::sleep(retry).await;
        }
    }
}

async fn pipeline_worker(state: AppState) {
    let mut rx = state.inner.jobs.subscribe();
    while rx.changed().await.is_ok() {
        let Some(job) = rx.borrow_and_update().clone() else {
            continue;
        };
        let backend = state.inner.backend.clone();
        let result = tokio::task::spawn_blocking(move || job.run(lock(&backend).as_mut())).await;
        match result {
            Ok(r) => {
                state.with_central(|c, now| c.apply_detections(r, now));
            }
            Err(e) => warn!("pipeline task failed: {e}"),
        }
    }
}

/// Top-level fields of `now` that differ from `last`, ignoring the snapshot's own timestamp.
pub fn snapshot_delta(last: &Map<String, Value>, now: &Map<String, Value>) -> Map<String, Value> {
    now.iter()
        .filter(|(k, v)| k.as_str() != "timestamp_ms" && last.get(*k) != Some(*v))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect()
}

//! Front-node runtime: one control loop speaking the wire protocol.

use std::time::{Duration, Instant};

use log::{info, warn};
use sentinel_core::agent::{AgentConfig, CameraSource, DepthSource, FrontAgent};
use sentinel_core::kinematics::Pose;
use sentinel_core::protocol::{encode_frame, FrameDecoder, NodeRole, WireMessage, PROTO_VERSION};
use sentinel_core::sim::SimFrontNode;
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};

/// What the front-node loop drives.
pub trait FrontDriver: Send {
    fn period(&self) -> Duration;
    fn handle(&mut self, m: &WireMessage) -> Vec<WireMessage>;
    fn tick(&mut self) -> Vec<WireMessage>;
}

impl FrontDriver for SimFrontNode {
    fn period(&self) -> Duration {
        Duration::from_secs_f64(self.tick_dt())
    }

    fn handle(&mut self, m: &WireMessage) -> Vec<WireMessage> {
        self.handle_message(m)
    }

    fn tick(&mut self) -> Vec<WireMessage> {
        self.step()
    }
}

/// Agent on real time, with pluggable camera and depth sources. Motor
/// output is logged; there is no drive hardware behind it.
pub struct AgentDriver {
    agent: FrontAgent,
    camera: Option<Box<dyn CameraSource + Send>>,
    depth: Box<dyn DepthSource + Send>,
    start: Instant,
    ticks: u64,
    frame_every: u64,
}

impl AgentDriver {
    pub fn new(
        config: AgentConfig,
        camera: Option<Box<dyn CameraSource + Send>>,
        depth: Box<dyn DepthSource + Send>,
    ) -> Self {
        let frame_every = ((config.telemetry_hz / config.frame_hz).round() as u64).max(1);
        AgentDriver {
            agent: FrontAgent::new(config, Pose::default()),
            camera,
            depth,
            start: Instant::now(),
            ticks: 0,
            frame_every,
        }
    }

    fn now(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

impl FrontDriver for AgentDriver {
    fn period(&self) -> Duration {
        Duration::from_secs_f64(self.agent.config().tick_period())
    }

    fn handle(&mut self, m: &WireMessage) -> Vec<WireMessage> {
        let now = self.now();
        self.agent.handle_message(m, now)
    }

    fn tick(&mut self) -> Vec<WireMessage> {
        let now = self.now();
        let depth = self.depth.profile();
        let out = self.agent.tick(self.agent.config().tick_period(), now, &depth);
        if !out.applied.is_zero() {
            log::debug!("drive {:.3} m/s {:.3} rad/s", out.applied.linear, out.applied.angular);
        }
        self.ticks += 1;
        let mut msgs = vec![out.telemetry];
        if self.ticks % self.frame_every == 0 {
            if let Some(cam) = self.camera.as_mut() {
                match cam.next_frame((now * 1000.0) as u64) {
                    Ok(f) => msgs.push(FrontAgent::frame_message(f)),
                    Err(e) => warn!("{e}"),
                }
            }
        }
        msgs
    }
}

async fn write_all(wr: &mut tokio::net::tcp::OwnedWriteHalf, msgs: Vec<WireMessage>) -> std::io::Result<()> {
    for m in msgs {
        let bytes = encode_frame(&m).map_err(std::io::Error::other)?;
        wr.write_all(&bytes).await?;
    }
    Ok(())
}

/// Runs the driver over one connection until it closes or is corrupted.
pub async fn run_front_link<D: FrontDriver + ?Sized>(stream: TcpStream, driver: &mut D) -> std::io::Result<()> {
    let _ = stream.set_nodelay(true);
    let (mut rd, mut wr) = stream.into_split();
    write_all(
        &mut wr,
        vec![WireMessage::Hello {
            node_role: NodeRole::Front,
            proto_version: PROTO_VERSION,
        }],
    )
    .await?;
    let mut dec = FrameDecoder::new();
    let mut buf = vec![0u8; 64 * 1024];
    let mut iv = tokio::time::interval(driver.period());
    iv.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    loop {
        tokio::select! {
            r = rd.read(&mut buf) => {
                let n = r?;
                if n == 0 {
                    return Ok(());
                }
                dec.feed(&buf[..n]);
                loop {
                    match dec.next_message() {
                        Ok(Some(m)) => {
                            let replies = driver.handle(&m);
                            write_all(&mut wr, replies).await?;
                        }
                        Ok(None) => break,
                        Err(e) => return Err(std::io::Error::new(std::io::ErrorKind::InvalidData, e)),
                    }
                }
            }
            _ = iv.tick() => {
                let out = driver.tick();
                write_all(&mut wr, out).await?;
            }
        }
    }
}

/// Serves central nodes one at a time. Between connections the driver is
/// not ticked, and the watchdog keeps it stopped when the link returns.
pub async fn serve_front<D: FrontDriver + ?Sized>(listener: TcpListener, driver: &mut D) -> std::io::Result<()> {
    loop {
        let (stream, peer) = listener.accept().await?;
        info!("central connected from {peer}");
        if let Err(e) = run_front_link(stream, driver).await {
            warn!("link to {peer}: {e}");
        }
        info!("central {peer} disconnected");
    }
}

/// Dials the central node, reconnecting after `retry`.
pub async fn dial_central<D: FrontDriver + ?Sized>(addr: &str, driver: &mut D, retry: Duration) {
    loop {
        match TcpStream::connect(addr).await {
            Ok(stream) => {
                info!("connected to central {addr}");
                if let Err(e) = run_front_link(stream, driver).await {
                    warn!("link to {addr}: {e}");
                }
            }
            Err(e) => warn!("connecting to {addr}: {e}"),
        }
        tokio::time::sleep(retry).await;
    }
}

use std::path::PathBuf;

use clap::Parser;
use log::{error, info};
use sentinel_core::agent::{AgentConfig, CameraSource, DirectoryCamera, NoDepth};
use sentinel_core::protocol::DEFAULT_AGENT_PORT;
use sentinel_node::front::{serve_front, AgentDriver};

/// Front node: executes drive commands under the watchdog and streams
/// telemetry and camera frames to the central node.
#[derive(Parser, Debug)]
#[command(name = "agent", version)]
struct Args {
    #[arg(long, env = "AGENT_LISTEN", default_value_t = format!("0.0.0.0:{DEFAULT_AGENT_PORT}"))]
    listen: String,
    /// `key = value` agent configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory of JPEG files replayed as the camera.
    #[arg(long)]
    frames: Option<PathBuf>,
}

#[tokio::main]
async fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let config = match &args.config {
        Some(p) => match AgentConfig::load(p) {
            Ok(c) => c,
            Err(e) => {
                error!("{e}");
                std::process::exit(1);
            }
        },
        None => AgentConfig::default(),
    };
    let camera = match &args.frames {
        Some(dir) => match DirectoryCamera::open(dir) {
            Ok(c) => Some(Box::new(c) as Box<dyn CameraSource + Send>),
            Err(e) => {
                error!("{e}");
                std::process::exit(1);
            }
        },
        None => None,
    };
    let depth = Box::new(NoDepth { samples: 31, fov: std::f64::consts::FRAC_PI_3 });
    let mut driver = AgentDriver::new(config, camera, depth);
    let listener = match tokio::net::TcpListener::bind(&args.listen).await {
        Ok(l) => l,
        Err(e) => {
            error!("binding {}: {e}", args.listen);
            std::process::exit(1);
        }
    };
    info!("front agent listening on {}", args.listen);
    if let Err(e) = serve_front(listener, &mut driver).await {
        error!("{e}");
        std::process::exit(1);
    }
}

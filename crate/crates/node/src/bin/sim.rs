use std::path::PathBuf;
use std::time::Duration;

use clap::{ArgGroup, Parser};
use log::{error, info};
use sentinel_core::detection::GridConfig;
use sentinel_core::sim::{Scenario, SimFrontNode};
use sentinel_node::front::{dial_central, serve_front};

/// Simulated front node: robot base, camera and depth sensor in a 2D world.
#[derive(Parser, Debug)]
#[command(name = "sim", version, group(ArgGroup::new("mode").required(true).args(["connect", "serve"])))]
struct Args {
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Dial the central node (`central --front-listen`).
    #[arg(long, value_name = "HOST:PORT")]
    connect: Option<String>,
    /// Listen as a front node for `central --agent-addr`.
    #[arg(long, value_name = "PORT")]
    serve: Option<u16>,
}

#[tokio::main]
async fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let scenario = match Scenario::load(&args.scenario) {
        Ok(s) => s,
        Err(e) => {
            error!("{e}");
            std::process::exit(1);
        }
    };
    if !scenario.script.is_empty() {
        info!("scenario script has {} steps; they are not replayed in live mode", scenario.script.len());
    }
    let mut node = match SimFrontNode::new(&scenario, args.seed, GridConfig::default()) {
        Ok(n) => n,
        Err(e) => {
            error!("{e}");
            std::process::exit(1);
        }
    };
    if let Some(addr) = args.connect {
        dial_central(&addr, &mut node, Duration::from_secs(1)).await;
    } else if let Some(port) = args.serve {
        let addr = format!("0.0.0.0:{port}");
        let listener = match tokio::net::TcpListener::bind(&addr).await {
            Ok(l) => l,
            Err(e) => {
                error!("binding {addr}: {e}");
                std::process::exit(1);
            }
        };
        info!("simulated front node listening on {addr}");
        if let Err(e) = serve_front(listener, &mut node).await {
            error!("{e}");
            std::process::exit(1);
        }
    }
}

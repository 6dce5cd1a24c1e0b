use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use clap::Parser;
use log::{error, info, warn};
use sentinel_core::command::{LanguageSet, StubTranslator};
use sentinel_core::detection::{FixtureBackend, InferenceBackend, OracleBackend};
use sentinel_core::server::{Central, CentralConfig, EventLog};
use sentinel_node::{http, AppState, Clock, SystemClock};

/// Central node: front-node session, detection pipeline, operator API.
#[derive(Parser, Debug)]
#[command(name = "central", version)]
struct Args {
    /// Operator HTTP address.
    #[arg(long, default_value = "0.0.0.0:8080")]
    listen: String,
    /// Dial the front node at this address.
    #[arg(long)]
    agent_addr: Option<String>,
    /// Accept front nodes (e.g. `sim --connect`) on this address.
    #[arg(long)]
    front_listen: Option<String>,
    /// `oracle` or `fixture:PATH`.
    #[arg(long, default_value = "oracle")]
    backend: String,
    #[arg(long, default_value = "logs")]
    log_dir: PathBuf,
    /// Static operator console to serve at `/`.
    #[arg(long)]
    console_dir: Option<PathBuf>,
    /// Tab-separated phrase table for the stub translator.
    #[arg(long)]
    phrases: Option<PathBuf>,
    /// Supported language list.
    #[arg(long)]
    languages: Option<PathBuf>,
}

fn backend(spec: &str) -> Result<Box<dyn InferenceBackend + Send>, String> {
    match spec.split_once(':') {
        None if spec == "oracle" => Ok(Box::new(OracleBackend)),
        Some(("fixture", path)) => FixtureBackend::load(path.as_ref())
            .map(|b| Box::new(b) as Box<dyn InferenceBackend + Send>)
            .map_err(|e| e.to_string()),
        _ => Err(format!("unknown backend '{spec}', expected oracle or fixture:PATH")),
    }
}

#[tokio::main]
async fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run(Args::parse()).await {
        error!("{e}");
        std::process::exit(1);
    }
}

async fn run(args: Args) -> Result<(), String> {
    let backend = backend(&args.backend)?;
    let translator = match &args.phrases {
        Some(p) => StubTranslator::load(p).map_err(|e| e.to_string())?,
        None => StubTranslator::default(),
    };
    let languages = match &args.languages {
        Some(p) => LanguageSet::load(p).map_err(|e| e.to_string())?,
        None => LanguageSet::default(),
    };
    let clock: Arc<dyn Clock> = Arc::new(SystemClock::default());
    let start_ms = clock.now_ms();
    let log = EventLog::open(&args.log_dir, start_ms)
        .map_err(|e| format!("opening event log in {}: {e}", args.log_dir.display()))?;
    info!("event log {}", log.path().map(|p| p.display().to_string()).unwrap_or_default());
    let cfg = CentralConfig { languages, ..CentralConfig::default() };
    let central = Central::new(cfg, Box::new(translator), log);
    let state = AppState::new(central, backend, clock);
    state.spawn_ticker(Duration::from_millis(50));
    state.spawn_snapshot_pusher(Duration::from_millis(100));

    if let Some(addr) = args.agent_addr.clone() {
        let s = state.clone();
        tokio::spawn(async move { s.dial_front(addr, Duration::from_secs(1)).await });
    }
    if let Some(addr) = &args.front_listen {
        let l = tokio::net::TcpListener::bind(addr).await.map_err(|e| format!("binding {addr}: {e}"))?;
        info!("accepting front nodes on {addr}");
        let s = state.clone();
        tokio::spawn(async move { s.listen_front(l).await });
    }
    if args.agent_addr.is_none() && args.front_listen.is_none() {
        warn!("neither --agent-addr nor --front-listen given; no front node can attach");
    }

    let listener = tokio::net::TcpListener::bind(&args.listen)
        .await
        .map_err(|e| format!("binding {}: {e}", args.listen))?;
    info!("operator API on http://{}", args.listen);
    axum::serve(listener, http::router(state, args.console_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| e.to_string())
}

use anyhow::Context;
use clap::Parser;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use grasplab_core::contrastive::EncoderParams;
use grasplab_core::demo::Thresholds;
use grasplab_core::protocol::SessionConfig;
use grasplab_core::scene::{generate_scene, Category, Scene, SceneConfig, SAMPLE_PERIOD};
use grasplab_server::{Server, ServerOptions};

/// Serves the simulated grasping workspace to one teleoperation client.
#[derive(Parser, Debug)]
#[command(name = "grasplab-serve", version)]
struct Args {
    /// Raw TCP listener for length-prefixed frames.
    #[arg(long, default_value = "127.0.0.1:7878")]
    listen: SocketAddr,
    /// HTTP listener for the `/session` WebSocket and the UI.
    #[arg(long, default_value = "127.0.0.1:7879")]
    http: SocketAddr,
    /// Scene file; a random scene is generated from --seed when absent.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Pretrained encoder.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 0.7)]
    tr: f64,
    #[arg(long, default_value_t = 0.9)]
    tl: f64,
    #[arg(long, default_value_t = 10)]
    m_points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Objects in a generated scene.
    #[arg(long, default_value_t = 4)]
    objects: usize,
    /// Static UI assets.
    #[arg(long)]
    ui_dir: Option<PathBuf>,
    /// Directory for session transcripts.
    #[arg(long)]
    transcript_dir: Option<PathBuf>,
    /// Milliseconds between TRACE events while executing.
    #[arg(long)]
    trace_period_ms: Option<u64>,
}

fn session_config(a: &Args) -> anyhow::Result<SessionConfig> {
    let model = EncoderParams::load(&a.model)
        .with_context(|| format!("loading model {}", a.model.display()))?;
    let scene = match &a.scene {
        Some(p) => Scene::load(p).with_context(|| format!("loading scene {}", p.display()))?,
        None => generate_scene(a.seed, a.objects, &Category::ALL, &SceneConfig::default())?,
    };
    let mut cfg = SessionConfig::new(scene, model);
    cfg.pipeline.thresholds = Thresholds::new(a.tr, a.tl)?;
    cfg.pipeline.m_points = a.m_points;
    Ok(cfg)
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GRASPLAB_LOG", "info")).init();
    let args = Args::parse();
    let opts = ServerOptions {
        session: session_config(&args)?,
        trace_period: args
            .trace_period_ms
            .map(Duration::from_millis)
            .unwrap_or(Duration::from_secs_f64(SAMPLE_PERIOD)),
        transcript_dir: args.transcript_dir.clone(),
        ui_dir: args.ui_dir.clone(),
    };
    let server = Server::new(opts);
    let tcp = tokio::net::TcpListener::bind(args.listen)
        .await
        .with_context(|| format!("binding {}", args.listen))?;
    let http = tokio::net::TcpListener::bind(args.http)
        .await
        .with_context(|| format!("binding {}", args.http))?;
    log::info!(
        "frames on {}, websocket on ws://{}/session",
        args.listen,
        args.http
    );
    let router = server.clone().router();
    tokio::select! {
        r = server.serve_tcp(tcp) => r?,
        r = axum::serve(http, router) => r?,
    }
    Ok(())
}

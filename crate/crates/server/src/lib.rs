//! Network front end for [`grasplab_core::protocol::Session`]: raw
//! length-prefixed frames over TCP, and the same envelopes over a WebSocket
//! at `/session` for browser clients. One client is served at a time.

use axum::extract::ws::{Message as WsMessage, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{mpsc, Arc};
use std::time::{Duration, Instant};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc::{unbounded_channel, UnboundedReceiver, UnboundedSender};
use tower_http::services::ServeDir;

use grasplab_core::protocol::{
    decode_frame, decode_payload, encode_frame, Envelope, FrameDecoder, FrameError, Message,
    Session, SessionConfig,
};

#[derive(Clone, Debug)]
pub struct ServerOptions {
    /// Template for every session; its id is replaced per connection.
    pub session: SessionConfig,
    /// Delay between TRACE events while executing.
    pub trace_period: Duration,
    /// Each finished session is saved here as `session-<id>.jsonl`.
    pub transcript_dir: Option<PathBuf>,
    /// Static UI assets, served at `/`.
    pub ui_dir: Option<PathBuf>,
}

struct Inbound {
    raw: Vec<u8>,
    decoded: Result<Envelope, FrameError>,
}

pub struct Server {
    opts: ServerOptions,
    active: AtomicBool,
    next_id: AtomicU64,
}

/// Held for as long as a client owns the session.
struct Claim(Arc<Server>);

impl Drop for Claim {
    fn drop(&mut self) {
        self.0.active.store(false, Ordering::SeqCst);
    }
}

fn busy() -> Envelope {
    Envelope::new(1, Message::Busy {})
}

impl Server {
    pub fn new(opts: ServerOptions) -> Arc<Self> {
        let first = opts.session.id;
        Arc::new(Self {
            opts,
            active: AtomicBool::new(false),
            next_id: AtomicU64::new(first),
        })
    }

    fn claim(self: &Arc<Self>) -> Option<Claim> {
        self.active
            .compare_exchange(false, true, Ordering::SeqCst, Ordering::SeqCst)
            .ok()
            .map(|_| Claim(self.clone()))
    }

    /// Runs the session on its own thread, so detection and planning never
    /// block the async transports. Ends when the inbound channel closes.
    fn spawn_session(&self, rx: mpsc::Receiver<Inbound>, tx: UnboundedSender<Envelope>) {
        let mut cfg = self.opts.session.clone();
        cfg.id = self.next_id.fetch_add(1, Ordering::SeqCst);
        let period = self.opts.trace_period;
        let dir = self.opts.transcript_dir.clone();
        std::thread::spawn(move || {
            let id = cfg.id;
            log::info!("session {id} started");
            let mut session = if dir.is_some() {
                Session::recording(cfg)
            } else {
                Session::new(cfg)
            };
            drive(&mut session, &rx, &tx, period);
            if let (Some(dir), Some(t)) = (dir, session.take_transcript()) {
                let path = dir.join(format!("session-{id}.jsonl"));
                match t.save(&path) {
                    Ok(()) => log::info!("transcript written to {}", path.display()),
                    Err(e) => log::error!("writing {}: {e}", path.display()),
                }
            }
            log::info!("session {id} ended");
        });
    }

    pub async fn serve_tcp(self: Arc<Self>, listener: TcpListener) -> std::io::Result<()> {
        loop {
            let (stream, peer) = listener.accept().await?;
            log::info!("tcp client {peer}");
            tokio::spawn(self.clone().tcp_client(stream));
        }
    }

    async fn tcp_client(self: Arc<Self>, mut stream: TcpStream) {
        let Some(claim) = self.claim() else {
            if let Ok(bytes) = encode_frame(&busy()) {
                let _ = stream.write_all(&bytes).await;
            }
            let _ = stream.shutdown().await;
            return;
        };
        let (mut rd, mut wr) = stream.into_split();
        let (in_tx, in_rx) = mpsc::channel();
        let (out_tx, mut out_rx) = unbounded_channel::<Envelope>();
        self.spawn_session(in_rx, out_tx);
        let writer = tokio::spawn(async move {
            while let Some(env) = out_rx.recv().await {
                let Ok(bytes) = encode_frame(&env) else {
                    continue;
                };
                if wr.write_all(&bytes).await.is_err() {
                    break;
                }
            }
        });
        let mut decoder = FrameDecoder::new();
        let mut buf = vec![0u8; 64 << 10];
        'read: loop {
            let n = match rd.read(&mut buf).await {
                Ok(0) | Err(_) => break,
                Ok(n) => n,
            };
            decoder.push(&buf[..n]);
            while let Some((raw, decoded)) = decoder.next_raw() {
                if in_tx.send(Inbound { raw, decoded }).is_err() {
                    break 'read;
                }
            }
        }
        drop(in_tx);
        let _ = writer.await;
        drop(claim);
    }

    /// `/session` WebSocket plus the UI assets when configured.
    pub fn router(self: Arc<Self>) -> Router {
        let ui = self.opts.ui_dir.clone();
        let r = Router::new()
            .route("/session", get(ws_upgrade))
            .with_state(self);
        match ui {
            Some(dir) => r.fallback_service(ServeDir::new(dir)),
            None => r,
        }
    }

    async fn ws_client(self: Arc<Self>, socket: WebSocket) {
        let (mut sink, mut stream) = socket.split();
        let Some(claim) = self.claim() else {
            if let Ok(text) = busy().to_json() {
                let _ = sink
                    .send(WsMessage::Text(
                        String::from_utf8_lossy(&text).into_owned().into(),
                    ))
                    .await;
            }
            let _ = sink.close().await;
            return;
        };
        let (in_tx, in_rx) = mpsc::channel();
        let (out_tx, out_rx) = unbounded_channel::<Envelope>();
        self.spawn_session(in_rx, out_tx);
        let writer = tokio::spawn(ws_writer(sink, out_rx));
        while let Some(Ok(msg)) = stream.next().await {
            let inbound = match msg {
                // text messages carry the bare payload; the socket already frames it
                WsMessage::Text(t) => {
                    let mut raw = (t.len() as u32).to_be_bytes().to_vec();
                    raw.extend_from_slice(t.as_bytes());
                    Inbound {
                        raw,
                        decoded: decode_payload(t.as_bytes()),
                    }
                }
                WsMessage::Binary(b) => Inbound {
                    decoded: decode_frame(&b),
                    raw: b.to_vec(),
                },
                WsMessage::Close(_) => break,
                _ => continue,
            };
            if in_tx.send(inbound).is_err() {
                break;
            }
        }
        drop(in_tx);
        let _ = writer.await;
        drop(claim);
    }
}

async fn ws_upgrade(State(server): State<Arc<Server>>, ws: WebSocketUpgrade) -> impl IntoResponse {
    ws.on_upgrade(move |socket| server.ws_client(socket))
}

async fn ws_writer(
    mut sink: futures_util::stream::SplitSink<WebSocket, WsMessage>,
    mut rx: UnboundedReceiver<Envelope>,
) {
    while let Some(env) = rx.recv().await {
        let Ok(bytes) = env.to_json() else { continue };
        let text = String::from_utf8_lossy(&bytes).into_owned();
        if sink.send(WsMessage::Text(text.into())).await.is_err() {
            break;
        }
    }
    let _ = sink.close().await;
}

/// Session loop: handles inbound frames in arrival order and, while an
/// execution is running, releases one TRACE event per `period`.
fn drive(
    session: &mut Session,
    rx: &mpsc::Receiver<Inbound>,
    tx: &UnboundedSender<Envelope>,
    period: Duration,
) {
    let mut next_event = Instant::now();
    loop {
        let inbound = if session.is_executing() {
            let wait = next_event.saturating_duration_since(Instant::now());
            match rx.recv_timeout(wait) {
                Ok(i) => Some(i),
                Err(mpsc::RecvTimeoutError::Timeout) => None,
                Err(mpsc::RecvTimeoutError::Disconnected) => return,
            }
        } else {
            match rx.recv() {
                Ok(i) => Some(i),
                Err(_) => return,
            }
        };
        let out = match inbound {
            Some(Inbound {
                raw,
                decoded: Ok(env),
            }) => {
                session.record_in(Some(env.seq), &raw);
                log::debug!("<- {} seq {}", env.message.kind(), env.seq);
                let was_executing = session.is_executing();
                let replies = session.handle(env);
                if !was_executing && session.is_executing() {
                    next_event = Instant::now();
                }
                replies
            }
            Some(Inbound {
                raw,
                decoded: Err(e),
            }) => {
                let seq = match &e {
                    FrameError::Payload { seq, .. } => *seq,
                    FrameError::TooLong(_) => None,
                };
                session.record_in(seq, &raw);
                log::warn!("bad frame: {e}");
                vec![session.bad_frame(&e)]
            }
            None => {
                next_event += period;
                session.pump().into_iter().collect()
            }
        };
        for env in out {
            if tx.send(env).is_err() {
                return;
            }
        }
    }
}

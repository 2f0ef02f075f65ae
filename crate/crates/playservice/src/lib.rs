//! Live GuanDan sessions over WebSocket. Humans and external bots claim seats
//! through `/ws`; in-process bot seats play through [`guandan::evalharness::Policy`].
//!
//! The message schema is described in `PROTOCOL.md` next to this crate.

pub mod protocol;
pub mod session;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use guandan::evalharness::{HeuristicPolicy, Policy, RandomPolicy};
use serde::{Deserialize, Serialize};
use tokio::sync::{mpsc, oneshot};

pub use protocol::{ClientMsg, SeatKind, ServerMsg, StateView};
pub use session::{Bots, Command, SessionHandle, SessionSummary};

pub const DEFAULT_BOT_BUDGET: Duration = Duration::from_secs(5);

pub struct AppState {
    bots: Bots,
    sessions: Mutex<BTreeMap<String, SessionHandle>>,
    next_id: AtomicU64,
    next_conn: AtomicU64,
}

impl AppState {
    /// `bot` plays the `bot` seat kind; the heuristic stands in when `None`.
    pub fn new(bot: Option<Arc<dyn Policy>>, budget: Duration) -> Arc<AppState> {
        let heuristic: Arc<dyn Policy> = Arc::new(HeuristicPolicy);
        Arc::new(AppState {
            bots: Bots { bot: bot.unwrap_or_else(|| heuristic.clone()), random: Arc::new(RandomPolicy), heuristic, budget },
            sessions: Mutex::default(),
            next_id: AtomicU64::new(1),
            next_conn: AtomicU64::new(1),
        })
    }

    pub fn create_session(&self, req: CreateSession) -> Result<SessionHandle, String> {
        let n = self.next_id.fetch_add(1, Ordering::SeqCst);
        let id = format!("s{n}");
        let handle = session::spawn_session(id.clone(), req.seats, req.seed.unwrap_or(n), self.bots.clone())?;
        self.sessions.lock().expect("sessions").insert(id, handle.clone());
        Ok(handle)
    }

    pub fn session(&self, id: &str) -> Option<SessionHandle> {
        self.sessions.lock().expect("sessions").get(id).cloned()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub seats: Vec<SeatKind>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Created {
    pub session: String,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/sessions", get(list_sessions).post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/log", get(get_log))
        .route("/ws", get(ws_upgrade))
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("serving on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

fn error(status: StatusCode, msg: impl Into<String>) -> Response {
    (status, Json(serde_json::json!({ "error": msg.into() }))).into_response()
}

async fn create_session(State(app): State<Arc<AppState>>, body: axum::body::Bytes) -> Response {
    let req: CreateSession = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.to_string()),
    };
    match app.create_session(req) {
        Ok(h) => Json(Created { session: h.id }).into_response(),
        Err(e) => error(StatusCode::BAD_REQUEST, e),
    }
}

async fn list_sessions(State(app): State<Arc<AppState>>) -> Json<Vec<SessionSummary>> {
    let handles: Vec<SessionHandle> = app.sessions.lock().expect("sessions").values().cloned().collect();
    let mut out = Vec::new();
    for h in handles {
        if let Some(s) = h.summary().await {
            out.push(s);
        }
    }
    Json(out)
}

async fn get_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    match app.session(&id) {
        Some(h) => match h.summary().await {
            Some(s) => Json(s).into_response(),
            None => error(StatusCode::GONE, "session stopped"),
        },
        None => error(StatusCode::NOT_FOUND, format!("unknown session {id}")),
    }
}

async fn get_log(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    match app.session(&id) {
        Some(h) => match h.log().await {
            Some(entries) => Json(entries).into_response(),
            None => error(StatusCode::GONE, "session stopped"),
        },
        None => error(StatusCode::NOT_FOUND, format!("unknown session {id}")),
    }
}

async fn ws_upgrade(State(app): State<Arc<AppState>>, ws: WebSocketUpgrade) -> Response {
    ws.on_upgrade(move |socket| connection(app, socket))
}

fn encode(msg: &ServerMsg) -> Message {
    Message::Text(serde_json::to_string(msg).expect("message serializes").into())
}

async fn connection(app: Arc<AppState>, socket: WebSocket) {
    let (mut sink, mut stream) = socket.split();
    let conn = app.next_conn.fetch_add(1, Ordering::SeqCst);
    // Wait for a hello that binds this connection to a seat.
    let (handle, seat, mut outbox_rx) = loop {
        let Some(Ok(msg)) = stream.next().await else { return };
        let Message::Text(text) = msg else { continue };
        let reject = |reason: String| encode(&ServerMsg::Reject { reason });
        match serde_json::from_str::<ClientMsg>(&text) {
            Ok(ClientMsg::Hello { session, seat, .. }) => {
                let Some(handle) = app.session(&session) else {
                    let _ = sink.send(reject(format!("unknown session {session}"))).await;
                    continue;
                };
                let (tx, rx) = mpsc::unbounded_channel();
                let (reply, joined) = oneshot::channel();
                handle.send(Command::Join { seat, conn, outbox: tx, reply }).await;
                match joined.await {
                    Ok(Ok(())) => break (handle, seat, rx),
                    Ok(Err(reason)) => {
                        let _ = sink.send(reject(reason)).await;
                    }
                    Err(_) => {
                        let _ = sink.send(reject("session stopped".into())).await;
                    }
                }
            }
            Ok(_) => {
                let _ = sink.send(reject("send hello first".into())).await;
            }
            Err(e) => {
                let _ = sink.send(reject(format!("bad message: {e}"))).await;
            }
        }
    };

    let writer = tokio::spawn(async move {
        while let Some(msg) = outbox_rx.recv().await {
            if sink.send(encode(&msg)).await.is_err() {
                break;
            }
        }
    });
    while let Some(Ok(msg)) = stream.next().await {
        let text = match msg {
            Message::Text(t) => t,
            Message::Close(_) => break,
            _ => continue,
        };
        let cmd = match serde_json::from_str::<ClientMsg>(&text) {
            Ok(ClientMsg::Action { action }) => Command::Action { seat, text: action },
            Ok(ClientMsg::State) => Command::State { seat },
            Ok(ClientMsg::Chat { text }) => Command::Chat { seat, text },
            Ok(ClientMsg::Hello { .. }) => continue,
            Err(e) => {
                log::debug!("connection {conn}: bad message: {e}");
                continue;
            }
        };
        if !handle.send(cmd).await {
            break;
        }
    }
    handle.send(Command::Leave { seat, conn }).await;
    writer.abort();
}

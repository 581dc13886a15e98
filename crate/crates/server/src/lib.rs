//! Live multibot sessions over WebSocket.
//!
//! One session per server. A single hub task owns the [`Session`], ticks it
//! on a fixed wall-clock interval and fans frames out to every connected
//! console. Clients talk to the hub through a channel, so all session
//! mutation happens in arrival order on one task.
//!
//! Frames are `{"type": "chat"|"state"|"wizard_inbox"|"error"|"control", "payload": ...}`.
//! Operators send `{"type":"say","text":...}`; the wizard sends
//! `{"type":"wizard","reply":...,"tbs":...}` after claiming the role with
//! `{"type":"control","action":"claim_wizard"}`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use serde_json::json;
use tokio::sync::mpsc;
use tokio::task::JoinHandle;

use multibot_core::orchestrator::{
    parse_tbs_value, to_jsonl, ClientMessage, Command, ControlAction, DmMode, Frame, Outbound, Session,
    SessionConfig,
};

#[derive(Debug, Clone)]
pub struct ServerOptions {
    /// Wall-clock time between simulation ticks.
    pub tick_interval: Duration,
    /// Where the session log is streamed, if anywhere.
    pub log_path: Option<PathBuf>,
}

impl Default for ServerOptions {
    fn default() -> Self {
        Self {
            tick_interval: Duration::from_millis(100),
            log_path: None,
        }
    }
}

type ClientId = u64;

enum Inbound {
    Join(ClientId, mpsc::UnboundedSender<String>),
    Text(ClientId, String),
    Leave(ClientId),
}

struct Hub {
    session: Session,
    /// DM mode to switch to whenever a wizard is present.
    preferred: DmMode,
    clients: BTreeMap<ClientId, mpsc::UnboundedSender<String>>,
    wizard: Option<ClientId>,
    wizard_msgs: u64,
    log: Option<File>,
    written: usize,
}

impl Hub {
    fn send(&self, to: ClientId, frame: &Frame) {
        if let Some(tx) = self.clients.get(&to) {
            let _ = tx.send(frame.to_json());
        }
    }

    fn broadcast(&self, frame: &Frame) {
        let text = frame.to_json();
        for tx in self.clients.values() {
            let _ = tx.send(text.clone());
        }
    }

    fn roles(&self) -> Frame {
        Frame::Control(json!({
            "event": "roles",
            "wizard": self.wizard,
            "dm_mode": self.session.dm_mode(),
        }))
    }

    fn join(&mut self, id: ClientId, tx: mpsc::UnboundedSender<String>) {
        self.clients.insert(id, tx);
        let config = self.session.config();
        self.send(
            id,
            &Frame::Control(json!({
                "event": "hello",
                "client": id,
                "session": self.session.id(),
                "map": config.map.document(),
                "robots": config.scenario.robots,
                "addressing": config.addressing,
                "dm_mode": self.session.dm_mode(),
                "wizard": self.wizard,
            })),
        );
        self.send(
            id,
            &Frame::Control(json!({ "event": "history", "turns": self.session.transcript() })),
        );
        self.send(id, &Frame::State(self.session.snapshot()));
    }

    fn leave(&mut self, id: ClientId) {
        self.clients.remove(&id);
        if self.wizard == Some(id) {
            self.release();
        }
    }

    fn release(&mut self) {
        self.wizard = None;
        self.session.attach_wizard(false);
        self.broadcast(&self.roles());
    }

    fn handle(&mut self, id: ClientId, text: &str) {
        let msg = match ClientMessage::parse(text) {
            Ok(m) => m,
            Err(e) => return self.send(id, &Frame::error(e)),
        };
        match msg {
            ClientMessage::Say { text } => {
                if text.trim().is_empty() {
                    return self.send(id, &Frame::error("empty utterance"));
                }
                self.session.enqueue(Command::Say(text));
            }
            ClientMessage::Wizard { reply, tbs } => {
                if self.wizard != Some(id) {
                    return self.send(id, &Frame::error("only the wizard may send wizard messages"));
                }
                if self.session.dm_mode() != DmMode::Wizard {
                    return self.send(id, &Frame::error("session is not in wizard mode"));
                }
                self.wizard_msgs += 1;
                let fallback = format!("wiz-{:04}", self.wizard_msgs);
                match tbs.map(|v| parse_tbs_value(&v, &fallback, self.session.clock())).transpose() {
                    Ok(tbs) => self.session.enqueue(Command::Wizard { reply, tbs }),
                    Err(e) => self.send(id, &Frame::error(e.to_string())),
                }
            }
            ClientMessage::Control { action, mode } => self.control(id, action, mode),
        }
    }

    fn control(&mut self, id: ClientId, action: ControlAction, mode: Option<DmMode>) {
        match action {
            ControlAction::ClaimWizard => {
                if self.wizard.is_some_and(|w| w != id) {
                    return self.send(id, &Frame::error("the wizard role is already held"));
                }
                self.wizard = Some(id);
                self.session.attach_wizard(true);
                if self.preferred == DmMode::Wizard {
                    let _ = self.session.set_dm_mode(DmMode::Wizard);
                }
            }
            ControlAction::ReleaseWizard => {
                if self.wizard != Some(id) {
                    return self.send(id, &Frame::error("you do not hold the wizard role"));
                }
                self.release();
                return;
            }
            ControlAction::SetDmMode => {
                let Some(mode) = mode else {
                    return self.send(id, &Frame::error("set_dm_mode needs a mode"));
                };
                if let Err(e) = self.session.set_dm_mode(mode) {
                    return self.send(id, &Frame::error(e.to_string()));
                }
                self.preferred = mode;
            }
        }
        self.broadcast(&self.roles());
    }

    fn tick(&mut self) {
        for out in self.session.tick() {
            match out {
                Outbound::Chat(turn) => self.broadcast(&Frame::Chat(turn)),
                Outbound::WizardInbox(turn) => {
                    if let Some(w) = self.wizard {
                        self.send(w, &Frame::WizardInbox(turn));
                    }
                }
                Outbound::WizardError(e) => {
                    if let Some(w) = self.wizard {
                        self.send(w, &Frame::error(e));
                    }
                }
            }
        }
        self.broadcast(&Frame::State(self.session.snapshot()));
        self.flush_log();
    }

    fn flush_log(&mut self) {
        let records = self.session.log();
        if let Some(file) = self.log.as_mut() {
            if self.written < records.len() {
                let _ = file.write_all(to_jsonl(&records[self.written..]).as_bytes());
                let _ = file.flush();
                self.written = records.len();
            }
        }
    }
}

async fn run_hub(mut hub: Hub, mut rx: mpsc::UnboundedReceiver<Inbound>, every: Duration) {
    let mut interval = tokio::time::interval(every);
    interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    hub.flush_log();
    loop {
        tokio::select! {
            ev = rx.recv() => match ev {
                Some(Inbound::Join(id, tx)) => hub.join(id, tx),
                Some(Inbound::Text(id, text)) => hub.handle(id, &text),
                Some(Inbound::Leave(id)) => hub.leave(id),
                None => break,
            },
            _ = interval.tick() => hub.tick(),
        }
    }
}

#[derive(Clone)]
struct AppState {
    hub: mpsc::UnboundedSender<Inbound>,
    next_id: Arc<AtomicU64>,
}

async fn ws_handler(ws: WebSocketUpgrade, State(state): State<AppState>) -> impl IntoResponse {
    let id = state.next_id.fetch_add(1, Ordering::Relaxed);
    ws.on_upgrade(move |socket| client(socket, id, state.hub))
}

async fn client(socket: WebSocket, id: ClientId, hub: mpsc::UnboundedSender<Inbound>) {
    let (mut sink, mut stream) = socket.split();
    let (tx, mut rx) = mpsc::unbounded_channel::<String>();
    if hub.send(Inbound::Join(id, tx)).is_err() {
        return;
    }
    let writer = tokio::spawn(async move {
        while let Some(text) = rx.recv().await {
            if sink.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
    });
    while let Some(Ok(msg)) = stream.next().await {
        let text = match msg {
            Message::Text(t) => t.to_string(),
            Message::Binary(b) => String::from_utf8_lossy(&b).into_owned(),
            Message::Close(_) => break,
            _ => continue,
        };
        if hub.send(Inbound::Text(id, text)).is_err() {
            break;
        }
    }
    let _ = hub.send(Inbound::Leave(id));
    writer.abort();
}

/// A running server.
pub struct ServerHandle {
    pub addr: SocketAddr,
    task: JoinHandle<io::Result<()>>,
}

impl ServerHandle {
    /// Waits for the server to stop (it only stops on an I/O error).
    pub async fn join(self) -> io::Result<()> {
        self.task.await.map_err(io::Error::other)?
    }

    pub fn abort(&self) {
        self.task.abort();
    }
}

/// Binds `addr` and starts serving `/ws` in the background.
pub async fn start(config: SessionConfig, options: ServerOptions, addr: SocketAddr) -> io::Result<ServerHandle> {
    let preferred = config.dm_mode;
    let mut session = Session::new(format!("live-{}", config.scenario.seed), config)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e.to_string()))?;
    // No wizard yet: the auto-DM answers until one claims the role.
    session.attach_wizard(false);
    let log = options.log_path.as_ref().map(File::create).transpose()?;
    let hub = Hub {
        session,
        preferred,
        clients: BTreeMap::new(),
        wizard: None,
        wizard_msgs: 0,
        log,
        written: 0,
    };
    let (tx, rx) = mpsc::unbounded_channel();
    let state = AppState {
        hub: tx,
        next_id: Arc::new(AtomicU64::new(1)),
    };
    let app = Router::new()
        .route("/ws", get(ws_handler))
        .route("/health", get(|| async { "ok" }))
        .with_state(state);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let addr = listener.local_addr()?;
    let every = options.tick_interval;
    let task = tokio::spawn(async move {
        let hub_task = tokio::spawn(run_hub(hub, rx, every));
        let served = axum::serve(listener, app).await;
        hub_task.abort();
        served
    });
    Ok(ServerHandle { addr, task })
}

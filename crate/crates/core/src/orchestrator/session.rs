use std::collections::{BTreeSet, VecDeque};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::dialogue::{interpret, on_status, AddressingMode, Corpus, DialogueContext, DialogueTurn, Speaker};
use crate::sim::{ScenarioConfig, SimEvent, SimState, Snapshot};
use crate::tbs::{encode, encode_status, validate, TbsMessage};
use crate::world::{load_map, WorldMap};

use super::log::{LogKind, LogRecord, LOG_VERSION};
use super::{DmMode, OrchestratorError};

/// Everything a session needs, already loaded and validated.
#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub map: Arc<WorldMap>,
    pub corpus: Arc<Corpus>,
    /// Hex SHA-256 of the corpus file as loaded.
    pub corpus_sha256: String,
    pub scenario: ScenarioConfig,
    pub dm_mode: DmMode,
    pub addressing: AddressingMode,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl SessionConfig {
    /// Builds a config from the map, corpus and scenario file contents.
    pub fn from_texts(map_json: &str, corpus_jsonl: &str, scenario_json: &str) -> Result<Self, OrchestratorError> {
        let map = load_map(map_json).map_err(|e| OrchestratorError::Config(format!("map: {e}")))?;
        let scenario =
            ScenarioConfig::from_json(scenario_json).map_err(|e| OrchestratorError::Config(format!("scenario: {e}")))?;
        let corpus = Corpus::from_jsonl(corpus_jsonl).map_err(|e| OrchestratorError::Config(e.to_string()))?;
        corpus
            .check_roster(&scenario.robots)
            .map_err(|e| OrchestratorError::Config(e.to_string()))?;
        Ok(Self {
            map: Arc::new(map),
            corpus: Arc::new(corpus),
            corpus_sha256: sha256_hex(corpus_jsonl.as_bytes()),
            scenario,
            dm_mode: DmMode::Auto,
            addressing: AddressingMode::Explicit,
        })
    }

    pub fn from_paths(
        map: &std::path::Path,
        corpus: &std::path::Path,
        scenario: &std::path::Path,
    ) -> Result<Self, OrchestratorError> {
        let read = |p: &std::path::Path| {
            std::fs::read_to_string(p).map_err(|e| OrchestratorError::Config(format!("{}: {e}", p.display())))
        };
        Self::from_texts(&read(map)?, &read(corpus)?, &read(scenario)?)
    }

    /// The bundled demo town.
    pub fn demo() -> Self {
        Self::from_texts(crate::demo::MAP_JSON, crate::demo::CORPUS_JSONL, crate::demo::CONFIG_JSON)
            .expect("demo assets are valid")
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.scenario.seed = seed;
        self
    }

    pub fn with_dm_mode(mut self, mode: DmMode) -> Self {
        self.dm_mode = mode;
        self
    }

    pub fn with_addressing(mut self, mode: AddressingMode) -> Self {
        self.addressing = mode;
        self
    }
}

/// Inbound requests, applied in order at tick boundaries.
#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Say(String),
    Wizard { reply: String, tbs: Option<TbsMessage> },
    SetDmMode(DmMode),
    AttachWizard(bool),
}

/// Messages a session produces for its clients.
#[derive(Debug, Clone, PartialEq)]
pub enum Outbound {
    /// A turn for every operator console.
    Chat(DialogueTurn),
    /// An operator turn routed to the wizard instead of the auto-DM.
    WizardInbox(DialogueTurn),
    /// A rejected wizard or control request; only the wizard sees it.
    WizardError(String),
}

fn wall_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// One live session: simulation, dialogue state and the append-only log.
pub struct Session {
    id: String,
    config: SessionConfig,
    sim: SimState,
    dialogue: DialogueContext,
    dm_mode: DmMode,
    wizard_attached: bool,
    queue: VecDeque<Command>,
    log: Vec<LogRecord>,
    used_ids: BTreeSet<String>,
}

impl Session {
    pub fn new(id: impl Into<String>, config: SessionConfig) -> Result<Self, OrchestratorError> {
        let id = id.into();
        let sim = SimState::new(Arc::clone(&config.map), config.scenario.clone())
            .map_err(|e| OrchestratorError::Config(e.to_string()))?;
        let dialogue = DialogueContext::new(
            &config.scenario.robots,
            config.addressing,
            config.scenario.dialogue.threshold,
        );
        let mut session = Self {
            dm_mode: config.dm_mode,
            wizard_attached: false,
            id,
            sim,
            dialogue,
            queue: VecDeque::new(),
            log: Vec::new(),
            used_ids: BTreeSet::new(),
            config,
        };
        let payload = json!({
            "version": LOG_VERSION,
            "session": session.id,
            "map": session.config.map.document(),
            "scenario": session.config.scenario,
            "corpus_sha256": session.config.corpus_sha256,
            "corpus_pairs": session.config.corpus.pairs().len(),
            "dm_mode": session.config.dm_mode,
            "addressing": session.config.addressing,
        });
        session.record(LogKind::Config, payload);
        Ok(session)
    }

    pub fn id(&self) -> &str {
        &self.id
    }
    pub fn config(&self) -> &SessionConfig {
        &self.config
    }
    pub fn sim(&self) -> &SimState {
        &self.sim
    }
    pub fn dialogue(&self) -> &DialogueContext {
        &self.dialogue
    }
    pub fn dm_mode(&self) -> DmMode {
        self.dm_mode
    }
    pub fn wizard_attached(&self) -> bool {
        self.wizard_attached
    }
    pub fn log(&self) -> &[LogRecord] {
        &self.log
    }
    pub fn clock(&self) -> f64 {
        self.sim.clock()
    }
    pub fn snapshot(&self) -> Snapshot {
        self.sim.snapshot()
    }
    /// Chat history (operator, DM, wizard and robot turns) in order.
    pub fn transcript(&self) -> Vec<DialogueTurn> {
        self.log
            .iter()
            .filter(|r| r.kind == LogKind::Turn)
            .filter_map(|r| serde_json::from_value(r.payload.clone()).ok())
            .collect()
    }

    fn record(&mut self, kind: LogKind, payload: Value) {
        self.log.push(LogRecord {
            wall_time: wall_now(),
            sim_time: self.sim.clock(),
            kind,
            payload,
        });
    }

    fn record_turn(&mut self, turn: &DialogueTurn, extra: Option<Value>) {
        let mut payload = serde_json::to_value(turn).expect("turns serialize");
        if let (Some(Value::Object(extra)), Value::Object(map)) = (extra, &mut payload) {
            map.extend(extra);
        }
        self.record(LogKind::Turn, payload);
    }

    /// Appends a free-form event record, e.g. a run timeout.
    pub fn record_event(&mut self, payload: Value) {
        self.record(LogKind::Event, payload);
    }

    pub fn enqueue(&mut self, cmd: Command) {
        self.queue.push_back(cmd);
    }

    /// Applies every queued command in arrival order.
    pub fn drain_queue(&mut self) -> Vec<Outbound> {
        let mut out = Vec::new();
        while let Some(cmd) = self.queue.pop_front() {
            match cmd {
                Command::Say(text) => out.extend(self.say(&text)),
                Command::Wizard { reply, tbs } => match self.wizard_submit(&reply, tbs) {
                    Ok(o) => out.extend(o),
                    Err(e) => {
                        self.record_event(json!({ "kind": "wizard_rejected", "message": e.to_string() }));
                        out.push(Outbound::WizardError(e.to_string()));
                    }
                },
                Command::SetDmMode(mode) => {
                    if let Err(e) = self.set_dm_mode(mode) {
                        out.push(Outbound::WizardError(e.to_string()));
                    }
                }
                Command::AttachWizard(on) => self.attach_wizard(on),
            }
        }
        out
    }

    /// Applies queued commands, then advances the simulation one tick.
    pub fn tick(&mut self) -> Vec<Outbound> {
        let mut out = self.drain_queue();
        let events = self.sim.step(self.config.scenario.tick);
        self.absorb(events, &mut out);
        out
    }

    fn absorb(&mut self, events: Vec<SimEvent>, out: &mut Vec<Outbound>) {
        for e in events {
            match e.status() {
                Some(status) => {
                    self.record(LogKind::Status, json!({ "line": encode_status(status) }));
                    if let Some(turn) = on_status(status, &mut self.dialogue) {
                        self.record_turn(&turn, None);
                        out.push(Outbound::Chat(turn));
                    }
                }
                None => {
                    let payload = serde_json::to_value(&e).expect("events serialize");
                    self.record(LogKind::Event, payload);
                }
            }
        }
    }

    /// Handles one operator utterance.
    pub fn say(&mut self, text: &str) -> Vec<Outbound> {
        let turn = DialogueTurn::operator(text, self.sim.clock());
        match self.dm_mode {
            DmMode::Wizard => {
                self.dialogue.transcript.push(turn.clone());
                self.record_turn(&turn, None);
                vec![Outbound::Chat(turn.clone()), Outbound::WizardInbox(turn)]
            }
            DmMode::Auto => {
                let config = self.config.clone();
                let dm = interpret(&turn, &mut self.dialogue, &config.corpus, &config.map, &config.scenario.robots);
                self.record_turn(
                    &turn,
                    Some(json!({
                        "disposition": dm.disposition,
                        "score": dm.score,
                        "matched_pair": dm.matched_pair,
                    })),
                );
                let reply = DialogueTurn::new(Speaker::Dm, dm.reply_to_operator.clone(), self.sim.clock());
                self.record_turn(&reply, None);
                let mut out = vec![Outbound::Chat(turn), Outbound::Chat(reply)];
                for msg in dm.tbs {
                    if let Err(e) = self.execute(msg, "dm", &mut out) {
                        let note = DialogueTurn::new(Speaker::Dm, format!("I can't do that: {e}"), self.sim.clock());
                        self.record_turn(&note, None);
                        out.push(Outbound::Chat(note));
                    }
                }
                out
            }
        }
    }

    /// Everything that could make `execute` refuse a command, without side effects.
    fn precheck(&self, msg: &TbsMessage) -> Result<(), OrchestratorError> {
        let reject = |e: String| OrchestratorError::Rejected(e);
        validate(msg, &self.config.map, &self.config.scenario.robots).map_err(|e| reject(e.to_string()))?;
        if self.used_ids.contains(&msg.msg_id) {
            return Err(reject(format!("message id {} already used", msg.msg_id)));
        }
        let robot = self
            .sim
            .robot(&msg.robot_id)
            .ok_or_else(|| reject(format!("unknown robot {}", msg.robot_id)))?;
        crate::behavior::compile(msg, &self.config.map, &robot.spec).map_err(|e| reject(e.to_string()))?;
        Ok(())
    }

    /// Validates, logs and dispatches a command to its robot.
    fn execute(&mut self, msg: TbsMessage, source: &str, out: &mut Vec<Outbound>) -> Result<(), OrchestratorError> {
        self.precheck(&msg)?;
        let line = encode(&msg);
        let events = self
            .sim
            .assign(msg.clone())
            .map_err(|e| OrchestratorError::Rejected(e.to_string()))?;
        self.used_ids.insert(msg.msg_id.clone());
        self.dialogue.register_task(&msg);
        self.record(LogKind::Tbs, json!({ "line": line, "source": source }));
        self.absorb(events, out);
        Ok(())
    }

    /// Registers or drops the wizard client. Losing the wizard falls back to the auto-DM.
    pub fn attach_wizard(&mut self, attached: bool) {
        self.wizard_attached = attached;
        if !attached && self.dm_mode == DmMode::Wizard {
            self.dm_mode = DmMode::Auto;
        }
    }

    pub fn set_dm_mode(&mut self, mode: DmMode) -> Result<(), OrchestratorError> {
        if mode == DmMode::Wizard && !self.wizard_attached {
            return Err(OrchestratorError::NoWizardConnected);
        }
        self.dm_mode = mode;
        Ok(())
    }

    /// Wizard reply plus optional command, standing in for the auto-DM.
    ///
    /// An invalid command is rejected before anything is sent, so the
    /// operator sees neither the reply nor the command.
    pub fn wizard_submit(&mut self, reply: &str, tbs: Option<TbsMessage>) -> Result<Vec<Outbound>, OrchestratorError> {
        if self.dm_mode != DmMode::Wizard {
            return Err(OrchestratorError::NotInWizardMode);
        }
        if let Some(msg) = &tbs {
            self.precheck(msg)?;
        }
        let mut out = Vec::new();
        if !reply.trim().is_empty() {
            let turn = DialogueTurn::new(Speaker::Dm, reply, self.sim.clock());
            self.dialogue.transcript.push(turn.clone());
            self.record_turn(&turn, Some(json!({ "source": "wizard" })));
            out.push(Outbound::Chat(turn));
        }
        if let Some(msg) = tbs {
            self.execute(msg, "wizard", &mut out)?;
        }
        Ok(out)
    }
}

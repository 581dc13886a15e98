//! Dialogue manager: retrieval NLU, addressee resolution, slot filling and
//! robot feedback phrasing.
//!
//! An operator turn is normalized, scored against the training corpus and,
//! if the best match clears the threshold, routed to one or more robots.
//! Complete instructions become validated TBS messages; incomplete ones open
//! a clarification frame that later turns can fill.

mod generate;
mod retrieval;
mod slots;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::RobotSpec;
use crate::tbs::{validate, ActionKind, StatusPhase, TbsMessage, TbsStatus, Urgency};
use crate::world::{LocationRef, WorldMap};

pub use generate::generate_corpus;
pub use retrieval::{
    normalize, score, to_jsonl, Category, Corpus, RobotBinding, Scored, Scorer, Slot, TbsTemplate, TfIdf,
    TrainingPair,
};
pub use slots::{extract_slots, robot_mentions, FilledSlots, URGENCY_WORDS};

pub const DEFAULT_THRESHOLD: f64 = 0.35;

/// Tokens that address every capable robot at once.
const BROADCAST_WORDS: [&str; 3] = ["both", "everyone", "everybody"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DialogueError {
    #[error("invalid corpus: {0}")]
    Corpus(String),
    #[error("no robot called {0}")]
    UnknownRobotName(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AddressingMode {
    #[default]
    Explicit,
    Implicit,
}

impl FromStr for AddressingMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "explicit" => Ok(AddressingMode::Explicit),
            "implicit" => Ok(AddressingMode::Implicit),
            _ => Err(format!("unknown addressing mode `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Speaker {
    Operator,
    Robot(String),
    Dm,
    Wizard,
}

impl fmt::Display for Speaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Speaker::Operator => f.write_str("operator"),
            Speaker::Robot(id) => write!(f, "robot:{id}"),
            Speaker::Dm => f.write_str("dm"),
            Speaker::Wizard => f.write_str("wizard"),
        }
    }
}

impl TryFrom<String> for Speaker {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        match s.as_str() {
            "operator" => Ok(Speaker::Operator),
            "dm" => Ok(Speaker::Dm),
            "wizard" => Ok(Speaker::Wizard),
            _ => match s.strip_prefix("robot:") {
                Some(id) if !id.is_empty() => Ok(Speaker::Robot(id.to_string())),
                _ => Err(format!("unknown speaker `{s}`")),
            },
        }
    }
}

impl From<Speaker> for String {
    fn from(s: Speaker) -> String {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueTurn {
    pub speaker: Speaker,
    pub text: String,
    #[serde(rename = "t")]
    pub time: f64,
    /// Feedback meant for the chat window only.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub chat_only: bool,
}

impl DialogueTurn {
    pub fn new(speaker: Speaker, text: impl Into<String>, time: f64) -> Self {
        Self {
            speaker,
            text: text.into(),
            time,
            chat_only: false,
        }
    }

    pub fn operator(text: impl Into<String>, time: f64) -> Self {
        Self::new(Speaker::Operator, text, time)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disposition {
    Executed,
    Clarification,
    WakeAck,
    OffTopic,
}

impl Disposition {
    pub fn as_str(self) -> &'static str {
        match self {
            Disposition::Executed => "executed",
            Disposition::Clarification => "clarification",
            Disposition::WakeAck => "wake_ack",
            Disposition::OffTopic => "off_topic",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DmOutput {
    pub reply_to_operator: String,
    pub tbs: Vec<TbsMessage>,
    pub matched_pair: Option<String>,
    pub score: f64,
    pub disposition: Disposition,
}

/// An instruction waiting for its missing slots.
#[derive(Debug, Clone, PartialEq)]
pub struct PendingFrame {
    pub pair_id: String,
    /// Addressed robots; empty while the robot slot is missing.
    pub robots: Vec<String>,
    pub filled: BTreeMap<Slot, String>,
    pub missing: BTreeSet<Slot>,
    pub urgent: bool,
    pub created: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attention {
    pub robot: String,
    pub since: f64,
}

/// Outcome of addressee resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Addressee {
    Wake(String),
    Robots(Vec<String>),
    NeedClarification,
}

/// Conversational state of one session.
#[derive(Debug, Clone, PartialEq)]
pub struct DialogueContext {
    pub mode: AddressingMode,
    pub threshold: f64,
    pub attended: Option<Attention>,
    pub pending: Option<PendingFrame>,
    pub busy: BTreeMap<String, bool>,
    pub transcript: Vec<DialogueTurn>,
    names: BTreeMap<String, String>,
    tasks: BTreeMap<String, TbsMessage>,
    next_msg: u64,
}

impl DialogueContext {
    pub fn new(roster: &[RobotSpec], mode: AddressingMode, threshold: f64) -> Self {
        Self {
            mode,
            threshold,
            attended: None,
            pending: None,
            busy: roster.iter().map(|r| (r.id.clone(), false)).collect(),
            transcript: Vec::new(),
            names: roster.iter().map(|r| (r.id.clone(), r.display_name.clone())).collect(),
            tasks: BTreeMap::new(),
            next_msg: 0,
        }
    }

    pub fn display_name<'a>(&'a self, id: &'a str) -> &'a str {
        self.names.get(id).map(String::as_str).unwrap_or(id)
    }

    pub fn is_busy(&self, id: &str) -> bool {
        self.busy.get(id).copied().unwrap_or(false)
    }

    /// Records a dispatched command so later statuses can be phrased.
    pub fn register_task(&mut self, msg: &TbsMessage) {
        self.busy.insert(msg.robot_id.clone(), true);
        self.tasks.insert(msg.msg_id.clone(), msg.clone());
    }

    pub fn task(&self, msg_id: &str) -> Option<&TbsMessage> {
        self.tasks.get(msg_id)
    }

    fn names_of(&self, ids: &[String]) -> String {
        let names: Vec<&str> = ids.iter().map(|id| self.display_name(id)).collect();
        match names.as_slice() {
            [] => "someone".into(),
            [one] => one.to_string(),
            [init @ .., last] => format!("{} and {last}", init.join(", ")),
        }
    }
}

fn spoken(name: &str) -> String {
    name.replace('_', " ")
}

/// Roster robot whose name the tokens begin with, and how many tokens it spans.
fn leading_robot(tokens: &[String], roster: &[RobotSpec]) -> Option<(String, usize)> {
    roster
        .iter()
        .flat_map(|r| [normalize(&r.display_name), normalize(&r.id)].map(|n| (r.id.clone(), n)))
        .filter(|(_, n)| !n.is_empty() && tokens.starts_with(n))
        .max_by_key(|(_, n)| n.len())
        .map(|(id, n)| (id, n.len()))
}

/// A capitalized leading word set off by a comma, e.g. "Rover, go".
fn name_like_prefix(text: &str) -> Option<String> {
    let (head, _) = text.trim_start().split_once(',')?;
    let head = head.trim();
    let mut chars = head.chars();
    let first = chars.next()?;
    (first.is_uppercase() && chars.all(char::is_alphanumeric)).then(|| head.to_string())
}

fn is_broadcast(tokens: &[String]) -> bool {
    tokens.iter().any(|t| BROADCAST_WORDS.contains(&t.as_str()))
        || tokens.windows(2).any(|w| w[0] == "you" && w[1] == "two")
}

/// Decides which robot(s) an utterance is for.
///
/// In order: a leading robot name (a bare name is a wake); the robot named by
/// a wake pair; broadcast words; a single robot mentioned outside a follow
/// instruction; the pair's implicit binding in implicit mode; the attended
/// robot; in implicit mode the only capable robot. Anything else needs a
/// clarification.
pub fn resolve_addressee(
    text: &str,
    tokens: &[String],
    pair: &TrainingPair,
    ctx: &DialogueContext,
    corpus: &Corpus,
    roster: &[RobotSpec],
) -> Result<Addressee, DialogueError> {
    let action = pair.tbs_template.as_ref().map(|t| t.action);
    let capable = |r: &&RobotSpec| action.is_none_or(|a| r.capabilities.contains(&a));
    if let Some((id, len)) = leading_robot(tokens, roster) {
        return Ok(if len == tokens.len() || pair.category == Category::Wake {
            Addressee::Wake(id)
        } else {
            Addressee::Robots(vec![id])
        });
    }
    if let Some(name) = name_like_prefix(text) {
        if !normalize(&name).iter().all(|t| corpus.scorer().knows(t)) {
            return Err(DialogueError::UnknownRobotName(name));
        }
    }
    let mentioned = robot_mentions(tokens, roster);
    if pair.category == Category::Wake {
        return Ok(match mentioned.first() {
            Some(id) => Addressee::Wake(id.clone()),
            None => Addressee::NeedClarification,
        });
    }
    if pair.robot_binding == RobotBinding::Broadcast || is_broadcast(tokens) {
        let ids: Vec<String> = roster.iter().filter(capable).map(|r| r.id.clone()).collect();
        return Ok(if ids.is_empty() {
            Addressee::NeedClarification
        } else {
            Addressee::Robots(ids)
        });
    }
    if pair.category != Category::Follow && mentioned.len() == 1 {
        return Ok(Addressee::Robots(mentioned));
    }
    if ctx.mode == AddressingMode::Implicit {
        if let RobotBinding::Implicit(id) = &pair.robot_binding {
            return Ok(Addressee::Robots(vec![id.clone()]));
        }
    }
    if let Some(att) = &ctx.attended {
        if !mentioned.contains(&att.robot) {
            return Ok(Addressee::Robots(vec![att.robot.clone()]));
        }
    }
    if ctx.mode == AddressingMode::Implicit {
        let ids: Vec<String> = roster
            .iter()
            .filter(capable)
            .filter(|r| !mentioned.contains(&r.id))
            .map(|r| r.id.clone())
            .collect();
        if ids.len() == 1 {
            return Ok(Addressee::Robots(ids));
        }
    }
    Ok(Addressee::NeedClarification)
}

fn slot_value(slots: &FilledSlots, slot: Slot, robots: &[String]) -> Option<String> {
    match slot {
        Slot::Destination => slots.destination.clone(),
        Slot::Route => slots.route.clone(),
        Slot::Area => slots.area.clone(),
        Slot::Leader => slots.robots.iter().find(|r| !robots.contains(r)).cloned(),
        Slot::Robot => None,
    }
}

fn question(slot: Slot, who: &str, action: Option<ActionKind>) -> String {
    match slot {
        Slot::Robot => "Which robot should do that?".into(),
        Slot::Destination => format!("Where should {who} go?"),
        Slot::Route => format!("Which route should {who} scout?"),
        Slot::Area => format!(
            "Which area should {who} {}?",
            action.map(|a| a.verb()).unwrap_or("cover")
        ),
        Slot::Leader => format!("Who should {who} follow?"),
    }
}

fn render(template: &str, ctx: &DialogueContext, robots: &[String], filled: &BTreeMap<Slot, String>) -> String {
    let mut out = template.replace("{robot}", &ctx.names_of(robots));
    for (slot, value) in filled {
        let shown = match slot {
            Slot::Leader => ctx.display_name(value).to_string(),
            _ => spoken(value),
        };
        out = out.replace(&slot.hole(), &shown);
    }
    out
}

fn off_topic_reply(roster: &[RobotSpec]) -> String {
    match roster.first() {
        Some(r) => format!(
            "Sorry, I didn't understand that. Try something like \"{}, go to the gate\".",
            r.display_name
        ),
        None => "Sorry, I didn't understand that.".into(),
    }
}

/// Interprets one operator turn, updating the context.
///
/// A pending clarification frame gets first claim on the turn; otherwise the
/// turn is matched against the corpus, routed and slot-filled. Failures never
/// escape: they become clarification or off-topic replies.
pub fn interpret(
    turn: &DialogueTurn,
    ctx: &mut DialogueContext,
    corpus: &Corpus,
    map: &WorldMap,
    roster: &[RobotSpec],
) -> DmOutput {
    ctx.transcript.push(turn.clone());
    let tokens = normalize(&turn.text);
    let slots = extract_slots(&tokens, map, roster);
    let out = fill_pending(turn, &tokens, &slots, ctx, corpus, map, roster)
        .unwrap_or_else(|| fresh(turn, &tokens, &slots, ctx, corpus, map, roster));
    ctx.transcript
        .push(DialogueTurn::new(Speaker::Dm, out.reply_to_operator.clone(), turn.time));
    out
}

fn fill_pending(
    turn: &DialogueTurn,
    tokens: &[String],
    slots: &FilledSlots,
    ctx: &mut DialogueContext,
    corpus: &Corpus,
    map: &WorldMap,
    roster: &[RobotSpec],
) -> Option<DmOutput> {
    let mut frame = ctx.pending.clone()?;
    let mut progressed = false;
    if frame.missing.contains(&Slot::Robot) {
        let leader = frame.filled.get(&Slot::Leader);
        let pick = leading_robot(tokens, roster)
            .map(|(id, _)| id)
            .or_else(|| slots.robots.iter().find(|r| Some(*r) != leader).cloned());
        if let Some(id) = pick {
            frame.robots = vec![id.clone()];
            frame.missing.remove(&Slot::Robot);
            ctx.attended = Some(Attention { robot: id, since: turn.time });
            progressed = true;
        }
    }
    for slot in frame.missing.clone() {
        if let Some(v) = slot_value(slots, slot, &frame.robots) {
            frame.filled.insert(slot, v);
            frame.missing.remove(&slot);
            progressed = true;
        }
    }
    if !progressed {
        return None;
    }
    frame.urgent |= slots.urgent;
    let pair = corpus.pair(&frame.pair_id)?.clone();
    Some(complete(turn, &pair, frame, 1.0, ctx, map, roster, None))
}

fn fresh(
    turn: &DialogueTurn,
    tokens: &[String],
    slots: &FilledSlots,
    ctx: &mut DialogueContext,
    corpus: &Corpus,
    map: &WorldMap,
    roster: &[RobotSpec],
) -> DmOutput {
    let (pair, score) = corpus.best(tokens);
    let pair = pair.clone();
    if score < ctx.threshold {
        return DmOutput {
            reply_to_operator: off_topic_reply(roster),
            tbs: Vec::new(),
            matched_pair: None,
            score,
            disposition: Disposition::OffTopic,
        };
    }
    let reply = |text: String, disposition| DmOutput {
        reply_to_operator: text,
        tbs: Vec::new(),
        matched_pair: Some(pair.id.clone()),
        score,
        disposition,
    };
    let robots = match resolve_addressee(&turn.text, tokens, &pair, ctx, corpus, roster) {
        Err(DialogueError::UnknownRobotName(name)) => {
            let known: Vec<&str> = roster.iter().map(|r| r.display_name.as_str()).collect();
            return reply(
                format!("I don't know a robot called {name}. I can talk to {}.", known.join(" and ")),
                Disposition::Clarification,
            );
        }
        Err(e) => return reply(e.to_string(), Disposition::Clarification),
        Ok(Addressee::Wake(id)) => {
            ctx.attended = Some(Attention { robot: id.clone(), since: turn.time });
            let text = if pair.category == Category::Wake {
                render(&pair.response_template, ctx, &[id], &BTreeMap::new())
            } else {
                format!("{} here. Go ahead.", ctx.display_name(&id))
            };
            return reply(text, Disposition::WakeAck);
        }
        Ok(Addressee::NeedClarification) if pair.category == Category::Wake => {
            return reply(question(Slot::Robot, "", None), Disposition::Clarification);
        }
        Ok(Addressee::NeedClarification) => Vec::new(),
        Ok(Addressee::Robots(ids)) => ids,
    };
    if let Some((id, _)) = leading_robot(tokens, roster) {
        ctx.attended = Some(Attention { robot: id, since: turn.time });
    } else if robots.len() > 1 {
        ctx.attended = None;
    }
    let mut frame = PendingFrame {
        pair_id: pair.id.clone(),
        robots: robots.clone(),
        filled: BTreeMap::new(),
        missing: BTreeSet::new(),
        urgent: slots.urgent,
        created: turn.time,
    };
    if robots.is_empty() {
        frame.missing.insert(Slot::Robot);
    }
    for &slot in &pair.required_slots {
        if slot == Slot::Robot {
            continue;
        }
        match slot_value(slots, slot, &robots) {
            Some(v) => {
                frame.filled.insert(slot, v);
            }
            None => {
                frame.missing.insert(slot);
            }
        }
    }
    let abandoned = ctx.pending.take().map(|_| "Dropping the earlier unfinished request. ".to_string());
    complete(turn, &pair, frame, score, ctx, map, roster, abandoned)
}

/// Emits the TBS for a frame with every slot filled, or asks for the next
/// missing slot and keeps the frame pending.
#[allow(clippy::too_many_arguments)]
fn complete(
    turn: &DialogueTurn,
    pair: &TrainingPair,
    frame: PendingFrame,
    score: f64,
    ctx: &mut DialogueContext,
    map: &WorldMap,
    roster: &[RobotSpec],
    notice: Option<String>,
) -> DmOutput {
    let notice = notice.unwrap_or_default();
    let template = pair.tbs_template.clone().expect("non-wake pairs carry a template");
    let mut out = DmOutput {
        reply_to_operator: String::new(),
        tbs: Vec::new(),
        matched_pair: Some(pair.id.clone()),
        score,
        disposition: Disposition::Clarification,
    };
    if let Some(&slot) = frame.missing.iter().find(|s| **s == Slot::Robot).or(frame.missing.first()) {
        let who = ctx.names_of(&frame.robots);
        out.reply_to_operator = format!("{notice}{}", question(slot, &who, Some(template.action)));
        ctx.pending = Some(frame);
        return out;
    }
    ctx.pending = None;
    let urgency = match (template.urgency, frame.urgent) {
        (Some(u), _) => u,
        (None, true) => Urgency::Urgent,
        (None, false) => Urgency::Normal,
    };
    let location = template.loc_slot().and_then(|slot| {
        let name = frame.filled.get(&slot)?.clone();
        Some(match slot {
            Slot::Route => LocationRef::route(name),
            Slot::Area => LocationRef::area(name),
            _ => LocationRef::waypoint(name),
        })
    });
    let mut messages = Vec::new();
    for (k, robot) in frame.robots.iter().enumerate() {
        let id = format!("tbs-{:04}", ctx.next_msg + 1 + k as u64);
        let mut msg = TbsMessage::new(id, turn.time, robot.clone(), template.action).with_urgency(urgency);
        msg.location = location.clone();
        msg.modifiers.stealth = template.stealth;
        if template.leader.is_some() {
            msg.leader_id = frame.filled.get(&Slot::Leader).cloned();
        }
        if let Err(e) = validate(&msg, map, roster) {
            out.reply_to_operator = format!("{notice}I can't do that: {}.", validation_text(&e, ctx, &msg));
            return out;
        }
        messages.push(msg);
    }
    for msg in &messages {
        ctx.next_msg += 1;
        ctx.register_task(msg);
    }
    out.reply_to_operator = format!("{notice}{}", render(&pair.response_template, ctx, &frame.robots, &frame.filled));
    out.tbs = messages;
    out.disposition = Disposition::Executed;
    out
}

fn validation_text(e: &crate::tbs::TbsError, ctx: &DialogueContext, msg: &TbsMessage) -> String {
    match e {
        crate::tbs::TbsError::Invalid { field: "action", .. } => {
            format!("{} cannot {}", ctx.display_name(&msg.robot_id), msg.action.verb())
        }
        crate::tbs::TbsError::Invalid { reason, .. } => reason.clone(),
        other => other.to_string(),
    }
}

fn describe_location(msg: &TbsMessage) -> String {
    match &msg.location {
        Some(LocationRef::Route { name }) => format!("route {}", spoken(name)),
        Some(LocationRef::Coordinates { x, y }) => format!("({x:.1}, {y:.1})"),
        Some(other) => other.name().map(spoken).unwrap_or_default(),
        None => String::new(),
    }
}

/// Phrases a robot status for the operator.
///
/// Accepted and started statuses stay silent; terminal statuses clear the
/// robot's busy flag.
pub fn on_status(status: &TbsStatus, ctx: &mut DialogueContext) -> Option<DialogueTurn> {
    let name = ctx.display_name(&status.robot_id).to_string();
    let task = ctx.tasks.get(&status.ref_msg_id).cloned();
    if status.phase.is_terminal() {
        ctx.busy.insert(status.robot_id.clone(), false);
        ctx.tasks.remove(&status.ref_msg_id);
    }
    let action = task.as_ref().map(|t| t.action);
    let verb = action.map(|a| a.verb()).unwrap_or("task");
    let place = task.as_ref().map(describe_location).unwrap_or_default();
    let what = if place.is_empty() { verb.to_string() } else { format!("{verb} {place}") };
    let text = match status.phase {
        StatusPhase::Accepted | StatusPhase::Started => return None,
        StatusPhase::Progress => {
            if status.detail.starts_with("detected ") {
                let ids: Vec<&str> = status.detections.iter().map(|d| d.object_id.as_str()).collect();
                format!("{name}: spotted {}", ids.join(", "))
            } else {
                format!("{name}: {}", status.detail)
            }
        }
        StatusPhase::Completed => match action {
            Some(ActionKind::Goto) => format!("{name}: arrived at {place}"),
            Some(ActionKind::Scout) => format!("{name}: finished scouting {place}"),
            Some(ActionKind::Search) => format!("{name}: finished searching {place}"),
            Some(ActionKind::Takeoff) => format!("{name}: airborne"),
            Some(ActionKind::Land) => format!("{name}: landed"),
            Some(ActionKind::Halt) => format!("{name}: stopped"),
            _ => format!("{name}: done"),
        },
        StatusPhase::Failed => format!("{name}: could not complete {what}: {}", status.detail),
        StatusPhase::Interrupted => format!("{name}: {what} interrupted"),
    };
    let mut turn = DialogueTurn::new(Speaker::Robot(status.robot_id.clone()), text, status.time);
    turn.chat_only = task.is_some_and(|t| t.modifiers.stealth);
    ctx.transcript.push(turn.clone());
    Some(turn)
}

use serde::Deserialize;
use serde_json::{json, Value};

use crate::dialogue::DialogueTurn;
use crate::sim::{RobotSnapshot, ScenarioConfig, Snapshot};
use crate::tbs::{decode, decode_status};

use super::log::{check_header, LogKind, LogRecord};
use super::metrics::{compute_metrics, Metrics};
use super::protocol::{parse_tbs_value, Frame};
use super::session::{Command, Session, SessionConfig};
use super::{DmMode, OrchestratorError};

/// One scripted operator or wizard input, delivered at sim time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptEntry {
    pub t: f64,
    pub input: ScriptInput,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScriptInput {
    Say(String),
    Wizard { reply: String, tbs: Option<Value> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    t: f64,
    #[serde(default)]
    say: Option<String>,
    #[serde(default)]
    wizard: Option<RawWizard>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWizard {
    #[serde(default)]
    reply: String,
    #[serde(default)]
    tbs: Option<Value>,
}

/// Parses a JSONL script of `{"t": .., "say": ".."}` and
/// `{"t": .., "wizard": {"reply": "..", "tbs": {..}}}` lines.
pub fn parse_script(text: &str) -> Result<Vec<ScriptEntry>, OrchestratorError> {
    let mut out: Vec<ScriptEntry> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |m: String| OrchestratorError::Script(format!("line {}: {m}", n + 1));
        let raw: RawEntry = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        if !raw.t.is_finite() || raw.t < 0.0 {
            return Err(err("time must be a non-negative number".into()));
        }
        if out.last().is_some_and(|prev| prev.t > raw.t) {
            return Err(err("times must not decrease".into()));
        }
        let input = match (raw.say, raw.wizard) {
            (Some(text), None) => ScriptInput::Say(text),
            (None, Some(w)) => ScriptInput::Wizard { reply: w.reply, tbs: w.tbs },
            _ => return Err(err("expected exactly one of `say` or `wizard`".into())),
        };
        out.push(ScriptEntry { t: raw.t, input });
    }
    Ok(out)
}

/// Runs a script to completion without any clients attached.
///
/// Inputs are delivered at the first tick boundary at or after their time.
/// The run ends once the script is exhausted and every robot is idle, or at
/// the scenario timeout.
pub fn run_headless(
    config: SessionConfig,
    script: &[ScriptEntry],
) -> Result<(Vec<LogRecord>, Metrics), OrchestratorError> {
    let wizard = config.dm_mode == DmMode::Wizard;
    if !wizard && script.iter().any(|e| matches!(e.input, ScriptInput::Wizard { .. })) {
        return Err(OrchestratorError::Config(
            "script contains wizard turns but the DM mode is auto".into(),
        ));
    }
    let timeout = config.scenario.timeout;
    let mut session = Session::new(format!("headless-{}", config.scenario.seed), config)?;
    session.attach_wizard(wizard);
    let mut next = 0;
    let mut wizard_count = 0;
    loop {
        while next < script.len() && script[next].t <= session.clock() + 1e-9 {
            match &script[next].input {
                ScriptInput::Say(text) => session.enqueue(Command::Say(text.clone())),
                ScriptInput::Wizard { reply, tbs } => {
                    wizard_count += 1;
                    let id = format!("wiz-{wizard_count:04}");
                    let parsed = tbs.as_ref().map(|v| parse_tbs_value(v, &id, session.clock())).transpose();
                    match parsed {
                        Ok(tbs) => session.enqueue(Command::Wizard { reply: reply.clone(), tbs }),
                        Err(e) => session.record_event(json!({ "kind": "wizard_rejected", "message": e.to_string() })),
                    }
                }
            }
            next += 1;
        }
        session.drain_queue();
        if next == script.len() && session.sim().all_idle() {
            break;
        }
        if session.clock() >= timeout - 1e-9 {
            session.record_event(json!({ "kind": "timeout" }));
            break;
        }
        session.tick();
    }
    let log = session.log().to_vec();
    let metrics = compute_metrics(&log)?;
    Ok((log, metrics))
}

/// Rebuilds the frames a console would have seen from a log. Read-only: no
/// simulation is run.
pub fn replay(records: &[LogRecord]) -> Result<Vec<Frame>, OrchestratorError> {
    let header = check_header(records)?;
    let scenario: ScenarioConfig = serde_json::from_value(header.payload.get("scenario").cloned().unwrap_or(Value::Null))
        .map_err(|e| OrchestratorError::MalformedLog(format!("config scenario: {e}")))?;
    let mut robots: Vec<RobotSnapshot> = scenario
        .robots
        .iter()
        .map(|r| RobotSnapshot {
            id: r.id.clone(),
            display_name: r.display_name.clone(),
            kind: r.kind,
            x: r.start.x,
            y: r.start.y,
            heading: 0.0,
            altitude: 0.0,
            airborne: false,
            busy: false,
            task: None,
            action: None,
        })
        .collect();
    let mut discovered: Vec<String> = Vec::new();
    let mut frames = Vec::new();
    let bad = |what: &str, e: String| OrchestratorError::MalformedLog(format!("{what}: {e}"));

    let move_to = |robots: &mut Vec<RobotSnapshot>, id: &str, x: f64, y: f64, alt: f64| {
        if let Some(r) = robots.iter_mut().find(|r| r.id == id) {
            if (x - r.x).hypot(y - r.y) > 1e-9 {
                r.heading = (y - r.y).atan2(x - r.x);
            }
            r.x = x;
            r.y = y;
            r.altitude = alt;
            r.airborne = alt > 0.05;
        }
    };

    for r in &records[1..] {
        match r.kind {
            LogKind::Config => return Err(OrchestratorError::MalformedLog("second config record".into())),
            LogKind::Turn => {
                let turn: DialogueTurn = serde_json::from_value(r.payload.clone()).map_err(|e| bad("turn", e.to_string()))?;
                frames.push(Frame::Chat(turn));
                continue;
            }
            LogKind::Tbs => {
                let line = r.payload.get("line").and_then(Value::as_str).unwrap_or_default();
                let msg = decode(line).map_err(|e| bad("tbs", e.to_string()))?;
                if let Some(robot) = robots.iter_mut().find(|x| x.id == msg.robot_id) {
                    robot.busy = true;
                    robot.task = Some(msg.msg_id);
                    robot.action = Some(msg.action);
                }
            }
            LogKind::Status => {
                let line = r.payload.get("line").and_then(Value::as_str).unwrap_or_default();
                let s = decode_status(line).map_err(|e| bad("status", e.to_string()))?;
                move_to(&mut robots, &s.robot_id, s.pose.x, s.pose.y, s.pose.alt);
                for d in &s.detections {
                    if !discovered.contains(&d.object_id) {
                        discovered.push(d.object_id.clone());
                    }
                }
                if s.phase.is_terminal() {
                    if let Some(robot) = robots.iter_mut().find(|x| x.id == s.robot_id) {
                        if robot.task.as_deref() == Some(s.ref_msg_id.as_str()) {
                            robot.busy = false;
                            robot.task = None;
                            robot.action = None;
                        }
                    }
                }
            }
            LogKind::Event => {
                let p = &r.payload;
                let (Some(id), Some(pose)) = (p.get("robot").and_then(Value::as_str), p.get("pose")) else {
                    continue;
                };
                let f = |k: &str| pose.get(k).and_then(Value::as_f64).unwrap_or(0.0);
                move_to(&mut robots, id, f("x"), f("y"), f("alt"));
                if let Some(obj) = p.pointer("/detection/object_id").and_then(Value::as_str) {
                    if !discovered.iter().any(|d| d == obj) {
                        discovered.push(obj.to_string());
                    }
                }
            }
        }
        frames.push(Frame::State(Snapshot {
            time: r.sim_time,
            robots: robots.clone(),
            discovered: discovered.clone(),
        }));
    }
    Ok(frames)
}

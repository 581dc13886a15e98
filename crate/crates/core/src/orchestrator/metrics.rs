use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::tbs::{decode, decode_status, ActionKind, StatusPhase, TbsMessage};
use crate::world::{MapDocument, Point2, WorldMap};

use super::log::{check_header, LogKind, LogRecord};
use super::OrchestratorError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMetrics {
    pub msg_id: String,
    pub robot: String,
    pub action: ActionKind,
    /// `dm` or `wizard`.
    pub source: String,
    /// Terminal phase, or `None` if the run ended first.
    pub outcome: Option<StatusPhase>,
    /// Seconds from issue to the terminal status.
    pub completion_time: Option<f64>,
    /// Planar distance from the final pose to the command's location.
    pub distance_to_goal: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Operator turns the DM classified.
    pub operator_turns: usize,
    pub off_topic: usize,
    pub clarifications: usize,
    /// Share of classified operator turns that were not off-topic. 1.0 when
    /// there were none, flagged by `coverage_defined = false`.
    pub coverage: f64,
    pub coverage_defined: bool,
    pub tasks_issued: usize,
    pub completed: usize,
    pub failed: usize,
    pub interrupted: usize,
    pub mean_completion_time: Option<f64>,
    pub timed_out: bool,
    /// Last simulated time in the log.
    pub duration: f64,
    pub tasks: Vec<TaskMetrics>,
}

struct Pending {
    msg: TbsMessage,
    metrics: TaskMetrics,
}

fn malformed(what: impl std::fmt::Display) -> OrchestratorError {
    OrchestratorError::MalformedLog(what.to_string())
}

fn line_of(r: &LogRecord) -> Result<&str, OrchestratorError> {
    r.payload
        .get("line")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed(format!("{:?} record without a line", r.kind)))
}

/// Scores a session log.
pub fn compute_metrics(records: &[LogRecord]) -> Result<Metrics, OrchestratorError> {
    let header = check_header(records)?;
    let doc: MapDocument = serde_json::from_value(header.payload.get("map").cloned().unwrap_or(Value::Null))
        .map_err(|e| malformed(format!("config map: {e}")))?;
    let map = WorldMap::from_document(doc).map_err(|e| malformed(format!("config map: {e}")))?;

    let mut m = Metrics {
        operator_turns: 0,
        off_topic: 0,
        clarifications: 0,
        coverage: 1.0,
        coverage_defined: false,
        tasks_issued: 0,
        completed: 0,
        failed: 0,
        interrupted: 0,
        mean_completion_time: None,
        timed_out: false,
        duration: 0.0,
        tasks: Vec::new(),
    };
    let mut tasks: BTreeMap<String, Pending> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();

    for r in &records[1..] {
        m.duration = m.duration.max(r.sim_time);
        match r.kind {
            LogKind::Config => return Err(malformed("second config record")),
            LogKind::Turn => {
                if r.payload.get("speaker").and_then(Value::as_str) != Some("operator") {
                    continue;
                }
                let Some(disposition) = r.payload.get("disposition").and_then(Value::as_str) else {
                    continue;
                };
                m.operator_turns += 1;
                match disposition {
                    "off_topic" => m.off_topic += 1,
                    "clarification" => m.clarifications += 1,
                    _ => {}
                }
            }
            LogKind::Tbs => {
                let msg = decode(line_of(r)?).map_err(|e| malformed(format!("tbs record: {e}")))?;
                let source = r.payload.get("source").and_then(Value::as_str).unwrap_or("dm").to_string();
                m.tasks_issued += 1;
                order.push(msg.msg_id.clone());
                let metrics = TaskMetrics {
                    msg_id: msg.msg_id.clone(),
                    robot: msg.robot_id.clone(),
                    action: msg.action,
                    source,
                    outcome: None,
                    completion_time: None,
                    distance_to_goal: None,
                };
                tasks.insert(msg.msg_id.clone(), Pending { msg, metrics });
            }
            LogKind::Status => {
                let status = decode_status(line_of(r)?).map_err(|e| malformed(format!("status record: {e}")))?;
                if !status.phase.is_terminal() {
                    continue;
                }
                let Some(task) = tasks.get_mut(&status.ref_msg_id) else {
                    return Err(malformed(format!("status for unknown command {}", status.ref_msg_id)));
                };
                match status.phase {
                    StatusPhase::Completed => m.completed += 1,
                    StatusPhase::Failed => m.failed += 1,
                    _ => m.interrupted += 1,
                }
                let t = &mut task.metrics;
                t.outcome = Some(status.phase);
                t.completion_time = Some(status.time - task.msg.issued_at);
                let pose = Point2::new(status.pose.x, status.pose.y);
                t.distance_to_goal = task
                    .msg
                    .location
                    .as_ref()
                    .and_then(|loc| map.location_point(loc).ok())
                    .map(|goal| goal.distance(pose));
            }
            LogKind::Event => {
                if r.payload.get("kind").and_then(Value::as_str) == Some("timeout") {
                    m.timed_out = true;
                }
            }
        }
    }

    if m.operator_turns > 0 {
        m.coverage = (m.operator_turns - m.off_topic) as f64 / m.operator_turns as f64;
        m.coverage_defined = true;
    }
    m.tasks = order.iter().filter_map(|id| tasks.remove(id)).map(|p| p.metrics).collect();
    let done: Vec<f64> = m
        .tasks
        .iter()
        .filter(|t| t.outcome == Some(StatusPhase::Completed))
        .filter_map(|t| t.completion_time)
        .collect();
    if !done.is_empty() {
        m.mean_completion_time = Some(done.iter().sum::<f64>() / done.len() as f64);
    }
    Ok(m)
}

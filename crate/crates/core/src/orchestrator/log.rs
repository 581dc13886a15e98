use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::OrchestratorError;

pub const LOG_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogKind {
    Config,
    Turn,
    Tbs,
    Status,
    Event,
}

/// One line of a session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRecord {
    pub wall_time: f64,
    pub sim_time: f64,
    pub kind: LogKind,
    pub payload: Value,
}

pub fn to_jsonl(records: &[LogRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("log records serialize"));
        out.push('\n');
    }
    out
}

/// Parses a JSONL log. The first record must be the config record.
pub fn parse_log(text: &str) -> Result<Vec<LogRecord>, OrchestratorError> {
    let mut records = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: LogRecord = serde_json::from_str(line)
            .map_err(|e| OrchestratorError::MalformedLog(format!("line {}: {e}", n + 1)))?;
        records.push(r);
    }
    check_header(&records)?;
    Ok(records)
}

pub(crate) fn check_header(records: &[LogRecord]) -> Result<&LogRecord, OrchestratorError> {
    let first = records
        .first()
        .filter(|r| r.kind == LogKind::Config)
        .ok_or_else(|| OrchestratorError::MalformedLog("missing config record".into()))?;
    match first.payload.get("version").and_then(Value::as_u64) {
        Some(LOG_VERSION) => Ok(first),
        Some(found) => Err(OrchestratorError::VersionMismatch { found }),
        None => Err(OrchestratorError::MalformedLog("config record has no version".into())),
    }
}

/// The log with every wall-clock stamp zeroed, for determinism comparisons.
pub fn strip_wall_time(records: &[LogRecord]) -> Vec<LogRecord> {
    records
        .iter()
        .cloned()
        .map(|mut r| {
            r.wall_time = 0.0;
            r
        })
        .collect()
}

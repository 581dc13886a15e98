//! Sessions: who talks to the robots, what gets logged, and how runs are scored.
//!
//! A [`Session`] owns one simulation and one dialogue context. Operator
//! utterances go either to the retrieval DM or, in wizard mode, to a human
//! wizard who answers with a reply and an optional command. Every turn,
//! command, status and event is appended to a JSONL log that
//! [`run_headless`], [`replay`] and [`compute_metrics`] all understand.

mod headless;
mod log;
mod metrics;
mod protocol;
mod session;

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use headless::{parse_script, replay, run_headless, ScriptEntry, ScriptInput};
pub use log::{parse_log, strip_wall_time, to_jsonl, LogKind, LogRecord, LOG_VERSION};
pub use metrics::{compute_metrics, Metrics, TaskMetrics};
pub use protocol::{parse_tbs_value, ClientMessage, ControlAction, ErrorPayload, Frame};
pub use session::{sha256_hex, Command, Outbound, Session, SessionConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrchestratorError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("malformed log: {0}")]
    MalformedLog(String),
    #[error("log version {found} is not supported (expected {LOG_VERSION})")]
    VersionMismatch { found: u64 },
    #[error("no wizard is connected")]
    NoWizardConnected,
    #[error("session is not in wizard mode")]
    NotInWizardMode,
    #[error("command rejected: {0}")]
    Rejected(String),
    #[error("malformed script: {0}")]
    Script(String),
}

/// Who answers the operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DmMode {
    #[default]
    Auto,
    Wizard,
}

impl DmMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DmMode::Auto => "auto",
            DmMode::Wizard => "wizard",
        }
    }
}

impl FromStr for DmMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(DmMode::Auto),
            // Scripted wizard turns replayed without a live wizard.
            "wizard" | "wizard-replay" => Ok(DmMode::Wizard),
            other => Err(format!("unknown DM mode `{other}` (expected auto or wizard)")),
        }
    }
}

//! Frames exchanged with operator and wizard consoles.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dialogue::DialogueTurn;
use crate::sim::Snapshot;
use crate::tbs::{decode, TbsMessage, TBS_VERSION};

use super::{DmMode, OrchestratorError};

/// Server → client: `{"type": ..., "payload": ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum Frame {
    Chat(DialogueTurn),
    State(Snapshot),
    WizardInbox(DialogueTurn),
    Error(ErrorPayload),
    Control(Value),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPayload {
    pub message: String,
}

impl Frame {
    pub fn error(message: impl Into<String>) -> Self {
        Frame::Error(ErrorPayload { message: message.into() })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("frames serialize")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlAction {
    ClaimWizard,
    ReleaseWizard,
    SetDmMode,
}

/// Client → server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Say {
        text: String,
    },
    /// `tbs` is either a wire-format line or the equivalent JSON object.
    Wizard {
        reply: String,
        #[serde(default)]
        tbs: Option<Value>,
    },
    Control {
        action: ControlAction,
        #[serde(default)]
        mode: Option<DmMode>,
    },
}

impl ClientMessage {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("bad client message: {e}"))
    }
}

/// Turns a wizard-supplied command into a message. Missing `v`, `id` and
/// `t` fields are filled in with the current version, `fallback_id` and `now`.
pub fn parse_tbs_value(value: &Value, fallback_id: &str, now: f64) -> Result<TbsMessage, OrchestratorError> {
    let mut obj = match value {
        Value::String(line) => serde_json::from_str::<Value>(line)
            .map_err(|e| OrchestratorError::Rejected(format!("bad command: {e}")))?,
        v => v.clone(),
    };
    let Value::Object(map) = &mut obj else {
        return Err(OrchestratorError::Rejected("command must be a JSON object".into()));
    };
    map.entry("v").or_insert(TBS_VERSION.into());
    map.entry("id").or_insert(fallback_id.into());
    map.entry("t").or_insert(now.into());
    for key in ["loc", "leader", "obj"] {
        map.entry(key).or_insert(Value::Null);
    }
    map.entry("mods")
        .or_insert(serde_json::json!({"urgency": "normal", "stealth": false}));
    decode(&obj.to_string()).map_err(|e| OrchestratorError::Rejected(e.to_string()))
}

use std::fmt;

use serde::{Deserialize, Serialize};

use super::TbsError;
use crate::sim::Detection;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatusPhase {
    Accepted,
    Started,
    Progress,
    Completed,
    Failed,
    Interrupted,
}

impl StatusPhase {
    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            StatusPhase::Completed | StatusPhase::Failed | StatusPhase::Interrupted
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StatusPhase::Accepted => "accepted",
            StatusPhase::Started => "started",
            StatusPhase::Progress => "progress",
            StatusPhase::Completed => "completed",
            StatusPhase::Failed => "failed",
            StatusPhase::Interrupted => "interrupted",
        }
    }

    /// Legal successor check for accepted → started → progress* → terminal.
    pub fn may_follow(self, previous: Option<StatusPhase>) -> bool {
        use StatusPhase::*;
        match previous {
            None => self == Accepted,
            Some(Accepted) => self == Started,
            Some(Started | Progress) => self != Accepted && self != Started,
            Some(Completed | Failed | Interrupted) => false,
        }
    }
}

impl fmt::Display for StatusPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub alt: f64,
}

/// Robot-to-operator report about one command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TbsStatus {
    #[serde(rename = "ref")]
    pub ref_msg_id: String,
    #[serde(rename = "robot")]
    pub robot_id: String,
    pub phase: StatusPhase,
    pub detail: String,
    pub pose: Pose,
    pub detections: Vec<Detection>,
    #[serde(rename = "t")]
    pub time: f64,
}

/// Per-task bookkeeping behind [`make_status`]: the last phase sent and the
/// detections not yet reported.
#[derive(Debug, Clone, PartialEq)]
pub struct StatusTracker {
    pub msg_id: String,
    pub robot_id: String,
    last_phase: Option<StatusPhase>,
    pending: Vec<Detection>,
}

impl StatusTracker {
    pub fn new(msg_id: impl Into<String>, robot_id: impl Into<String>) -> Self {
        Self {
            msg_id: msg_id.into(),
            robot_id: robot_id.into(),
            last_phase: None,
            pending: Vec::new(),
        }
    }

    pub fn last_phase(&self) -> Option<StatusPhase> {
        self.last_phase
    }

    pub fn push_detection(&mut self, detection: Detection) {
        self.pending.push(detection);
    }

    pub fn has_pending(&self) -> bool {
        !self.pending.is_empty()
    }
}

/// Builds the next status for a task, draining the detections collected
/// since the previous one.
pub fn make_status(
    task: &mut StatusTracker,
    phase: StatusPhase,
    detail: impl Into<String>,
    pose: Pose,
    time: f64,
) -> Result<TbsStatus, TbsError> {
    if !phase.may_follow(task.last_phase) {
        return Err(TbsError::IllegalPhaseTransition {
            from: task
                .last_phase
                .map(|p| p.to_string())
                .unwrap_or_else(|| "nothing".into()),
            to: phase,
        });
    }
    task.last_phase = Some(phase);
    Ok(TbsStatus {
        ref_msg_id: task.msg_id.clone(),
        robot_id: task.robot_id.clone(),
        phase,
        detail: detail.into(),
        pose,
        detections: std::mem::take(&mut task.pending),
        time,
    })
}

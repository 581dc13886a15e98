//! Tactical Behavior Specification: the structured command a robot receives
//! and the status reports it sends back.
//!
//! Both travel as single-line JSON with a fixed key order so session logs stay
//! greppable and replayable.

mod codec;
mod status;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::RobotSpec;
use crate::world::{LocationRef, ObjectClass, WorldMap};

pub use codec::{decode, decode_status, encode, encode_status};
pub use status::{make_status, Pose, StatusPhase, StatusTracker, TbsStatus};

pub const TBS_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TbsError {
    #[error("invalid TBS field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("decode error at column {column}{}: {message}", field.as_ref().map(|f| format!(" (field `{f}`)")).unwrap_or_default())]
    Decode {
        field: Option<String>,
        column: usize,
        message: String,
    },
    #[error("illegal status transition {from} -> {to}")]
    IllegalPhaseTransition { from: String, to: StatusPhase },
}

impl TbsError {
    fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        TbsError::Invalid {
            field,
            reason: reason.into(),
        }
    }

    pub fn field(&self) -> Option<&str> {
        match self {
            TbsError::Invalid { field, .. } => Some(field),
            TbsError::Decode { field, .. } => field.as_deref(),
            TbsError::IllegalPhaseTransition { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ActionKind {
    Goto,
    Follow,
    Scout,
    Search,
    Patrol,
    Takeoff,
    Land,
    Halt,
}

impl ActionKind {
    pub const ALL: [ActionKind; 8] = [
        ActionKind::Goto,
        ActionKind::Follow,
        ActionKind::Scout,
        ActionKind::Search,
        ActionKind::Patrol,
        ActionKind::Takeoff,
        ActionKind::Land,
        ActionKind::Halt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::Goto => "GOTO",
            ActionKind::Follow => "FOLLOW",
            ActionKind::Scout => "SCOUT",
            ActionKind::Search => "SEARCH",
            ActionKind::Patrol => "PATROL",
            ActionKind::Takeoff => "TAKEOFF",
            ActionKind::Land => "LAND",
            ActionKind::Halt => "HALT",
        }
    }

    /// Lower-case verb used in operator-facing text.
    pub fn verb(self) -> &'static str {
        match self {
            ActionKind::Goto => "go-to",
            ActionKind::Follow => "follow",
            ActionKind::Scout => "scout",
            ActionKind::Search => "search",
            ActionKind::Patrol => "patrol",
            ActionKind::Takeoff => "takeoff",
            ActionKind::Land => "landing",
            ActionKind::Halt => "halt",
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ActionKind::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown action `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Urgency {
    #[default]
    Normal,
    Urgent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Modifiers {
    pub urgency: Urgency,
    /// Feedback goes to the chat window only.
    pub stealth: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TbsMessage {
    pub version: u32,
    pub msg_id: String,
    pub issued_at: f64,
    pub robot_id: String,
    pub action: ActionKind,
    pub location: Option<LocationRef>,
    /// Object class the behavior reacts to; `None` means injured people.
    pub object_info: Option<ObjectClass>,
    pub leader_id: Option<String>,
    pub modifiers: Modifiers,
}

impl TbsMessage {
    pub fn new(
        msg_id: impl Into<String>,
        issued_at: f64,
        robot_id: impl Into<String>,
        action: ActionKind,
    ) -> Self {
        Self {
            version: TBS_VERSION,
            msg_id: msg_id.into(),
            issued_at,
            robot_id: robot_id.into(),
            action,
            location: None,
            object_info: None,
            leader_id: None,
            modifiers: Modifiers::default(),
        }
    }

    pub fn with_location(mut self, loc: LocationRef) -> Self {
        self.location = Some(loc);
        self
    }

    pub fn with_leader(mut self, leader: impl Into<String>) -> Self {
        self.leader_id = Some(leader.into());
        self
    }

    pub fn with_urgency(mut self, urgency: Urgency) -> Self {
        self.modifiers.urgency = urgency;
        self
    }

    pub fn target_class(&self) -> ObjectClass {
        self.object_info.unwrap_or(ObjectClass::InjuredPerson)
    }
}

/// Checks a message against the map and robot roster, reporting the first
/// violated rule.
pub fn validate(msg: &TbsMessage, map: &WorldMap, roster: &[RobotSpec]) -> Result<(), TbsError> {
    if msg.version != TBS_VERSION {
        return Err(TbsError::invalid("v", format!("unsupported version {}", msg.version)));
    }
    if msg.msg_id.trim().is_empty() {
        return Err(TbsError::invalid("id", "empty message id"));
    }
    if !msg.issued_at.is_finite() {
        return Err(TbsError::invalid("t", "issue time must be finite"));
    }
    let robot = roster
        .iter()
        .find(|r| r.id == msg.robot_id)
        .ok_or_else(|| TbsError::invalid("robot", format!("unknown robot `{}`", msg.robot_id)))?;

    use ActionKind::*;
    let loc = msg.location.as_ref();
    match (msg.action, loc) {
        (Goto, Some(LocationRef::Waypoint { .. } | LocationRef::Coordinates { .. })) => {}
        (Goto, _) => return Err(TbsError::invalid("loc", "GOTO requires waypoint or coordinates")),
        (Scout, Some(LocationRef::Route { .. })) => {}
        (Scout, _) => return Err(TbsError::invalid("loc", "SCOUT requires a route")),
        (Search, Some(LocationRef::Area { .. })) => {}
        (Search, _) => return Err(TbsError::invalid("loc", "SEARCH requires an area")),
        (Patrol, Some(LocationRef::Area { .. })) => {}
        (Patrol, _) => return Err(TbsError::invalid("loc", "PATROL requires an area")),
        (Follow | Takeoff | Land | Halt, None) => {}
        (action, Some(_)) => {
            return Err(TbsError::invalid("loc", format!("{action} takes no location")))
        }
    }
    if let Some(loc) = loc {
        if !map.contains_ref(loc) {
            return Err(TbsError::invalid("loc", format!("unknown location {}", loc.label())));
        }
    }
    match (msg.action, msg.leader_id.as_deref()) {
        (Follow, None) => return Err(TbsError::invalid("leader", "FOLLOW requires a leader")),
        (Follow, Some(l)) if l == msg.robot_id => {
            return Err(TbsError::invalid("leader", "self-follow"))
        }
        (Follow, Some(l)) if !roster.iter().any(|r| r.id == l) => {
            return Err(TbsError::invalid("leader", format!("unknown leader `{l}`")))
        }
        (Follow, Some(_)) | (_, None) => {}
        (action, Some(_)) => {
            return Err(TbsError::invalid("leader", format!("{action} takes no leader")))
        }
    }
    if !robot.capabilities.contains(&msg.action) {
        return Err(TbsError::invalid(
            "action",
            format!("{} cannot {}", robot.display_name, msg.action.verb()),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{RobotKind, RobotSpec};
    use crate::world::load_map;

    fn fixture() -> (WorldMap, Vec<RobotSpec>) {
        let map = load_map(
            r#"{"name":"m","waypoints":[{"name":"gate","x":0,"y":0},{"name":"b","x":10,"y":0}],
                "edges":[{"from":"gate","to":"b"}],
                "routes":[{"name":"bravo","waypoints":["gate","b"]}],
                "areas":[{"name":"park","polygon":[[0,0],[10,0],[10,10]]}]}"#,
        )
        .unwrap();
        let roster = vec![
            RobotSpec::new("husky", "Husky", RobotKind::Ground),
            RobotSpec::new("snapdragon", "Snapdragon", RobotKind::Aerial),
        ];
        (map, roster)
    }

    #[test]
    fn goto_with_area_is_rejected() {
        let (map, roster) = fixture();
        let msg = TbsMessage::new("m1", 0.0, "husky", ActionKind::Goto)
            .with_location(LocationRef::area("park"));
        let err = validate(&msg, &map, &roster).unwrap_err();
        assert_eq!(err.field(), Some("loc"));
        assert!(err.to_string().contains("GOTO requires waypoint or coordinates"));
    }

    #[test]
    fn scout_bravo_for_aerial_is_ok() {
        let (map, roster) = fixture();
        let msg = TbsMessage::new("m1", 0.0, "snapdragon", ActionKind::Scout)
            .with_location(LocationRef::route("bravo"));
        assert_eq!(validate(&msg, &map, &roster), Ok(()));
    }

    #[test]
    fn self_follow_is_rejected() {
        let (map, roster) = fixture();
        let msg = TbsMessage::new("m1", 0.0, "husky", ActionKind::Follow).with_leader("husky");
        let err = validate(&msg, &map, &roster).unwrap_err();
        assert!(err.to_string().contains("self-follow"));
    }

    #[test]
    fn capability_and_roster_checks() {
        let (map, roster) = fixture();
        let msg = TbsMessage::new("m1", 0.0, "husky", ActionKind::Takeoff);
        assert_eq!(validate(&msg, &map, &roster).unwrap_err().field(), Some("action"));
        let msg = TbsMessage::new("m1", 0.0, "jackal", ActionKind::Halt);
        assert_eq!(validate(&msg, &map, &roster).unwrap_err().field(), Some("robot"));
        let msg = TbsMessage::new("m1", 0.0, "husky", ActionKind::Goto)
            .with_location(LocationRef::waypoint("nowhere"));
        assert_eq!(validate(&msg, &map, &roster).unwrap_err().field(), Some("loc"));
        let mut msg = TbsMessage::new("m1", 0.0, "husky", ActionKind::Halt);
        msg.version = 2;
        assert_eq!(validate(&msg, &map, &roster).unwrap_err().field(), Some("v"));
    }
}

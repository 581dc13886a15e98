use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use super::{ActionKind, Modifiers, Pose, StatusPhase, TbsError, TbsMessage, TbsStatus, TBS_VERSION};
use crate::sim::Detection;
use crate::world::{LocationRef, ObjectClass};

// Field order here is the wire order.
#[derive(Serialize)]
struct WireMessage<'a> {
    v: u32,
    id: &'a str,
    t: f64,
    robot: &'a str,
    action: ActionKind,
    loc: Option<&'a LocationRef>,
    leader: Option<&'a str>,
    obj: Option<ObjectClass>,
    mods: &'a Modifiers,
}

#[derive(Serialize)]
struct WireStatus<'a> {
    v: u32,
    #[serde(rename = "ref")]
    ref_: &'a str,
    robot: &'a str,
    phase: StatusPhase,
    detail: &'a str,
    pose: &'a Pose,
    detections: &'a [Detection],
    t: f64,
}

const MESSAGE_KEYS: [&str; 9] = ["v", "id", "t", "robot", "action", "loc", "leader", "obj", "mods"];
const STATUS_KEYS: [&str; 8] = ["v", "ref", "robot", "phase", "detail", "pose", "detections", "t"];

/// Canonical one-line encoding of a command.
pub fn encode(msg: &TbsMessage) -> String {
    let wire = WireMessage {
        v: msg.version,
        id: &msg.msg_id,
        t: msg.issued_at,
        robot: &msg.robot_id,
        action: msg.action,
        loc: msg.location.as_ref(),
        leader: msg.leader_id.as_deref(),
        obj: msg.object_info,
        mods: &msg.modifiers,
    };
    serde_json::to_string(&wire).expect("TBS messages always serialize")
}

/// Canonical one-line encoding of a status report.
pub fn encode_status(status: &TbsStatus) -> String {
    let wire = WireStatus {
        v: TBS_VERSION,
        ref_: &status.ref_msg_id,
        robot: &status.robot_id,
        phase: status.phase,
        detail: &status.detail,
        pose: &status.pose,
        detections: &status.detections,
        t: status.time,
    };
    serde_json::to_string(&wire).expect("TBS statuses always serialize")
}

fn field_error(field: &str, message: impl Into<String>) -> TbsError {
    TbsError::Decode {
        field: Some(field.to_string()),
        column: 0,
        message: message.into(),
    }
}

fn parse_object(line: &str, keys: &[&str]) -> Result<Map<String, Value>, TbsError> {
    if line.contains('\n') {
        return Err(TbsError::Decode {
            field: None,
            column: line.find('\n').unwrap_or(0) + 1,
            message: "embedded newline".into(),
        });
    }
    let value: Value = serde_json::from_str(line).map_err(|e| TbsError::Decode {
        field: None,
        column: e.column(),
        message: e.to_string(),
    })?;
    let Value::Object(obj) = value else {
        return Err(TbsError::Decode {
            field: None,
            column: 1,
            message: "expected a JSON object".into(),
        });
    };
    if let Some(extra) = obj.keys().find(|k| !keys.contains(&k.as_str())) {
        return Err(field_error(extra, "unknown field"));
    }
    if let Some(missing) = keys.iter().find(|k| !obj.contains_key(**k)) {
        return Err(field_error(missing, "missing field"));
    }
    match obj.get("v").and_then(Value::as_u64) {
        Some(v) if v == u64::from(TBS_VERSION) => Ok(obj),
        _ => Err(field_error("v", format!("expected version {TBS_VERSION}"))),
    }
}

fn take<T: DeserializeOwned>(obj: &mut Map<String, Value>, field: &str) -> Result<T, TbsError> {
    let value = obj.remove(field).unwrap_or(Value::Null);
    serde_json::from_value(value).map_err(|e| field_error(field, e.to_string()))
}

fn finite(value: f64, field: &str) -> Result<f64, TbsError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(field_error(field, "not a finite number"))
    }
}

/// Parses a command line. Rejects unknown actions, extra or missing fields
/// and any version other than the current one.
pub fn decode(line: &str) -> Result<TbsMessage, TbsError> {
    let mut obj = parse_object(line, &MESSAGE_KEYS)?;
    let action: String = take(&mut obj, "action")?;
    let action: ActionKind = action.parse().map_err(|e: String| field_error("action", e))?;
    let loc: Option<LocationRef> = take(&mut obj, "loc")?;
    if let Some(LocationRef::Coordinates { x, y }) = &loc {
        finite(*x, "loc")?;
        finite(*y, "loc")?;
    }
    Ok(TbsMessage {
        version: TBS_VERSION,
        msg_id: take(&mut obj, "id")?,
        issued_at: finite(take(&mut obj, "t")?, "t")?,
        robot_id: take(&mut obj, "robot")?,
        action,
        location: loc,
        object_info: take(&mut obj, "obj")?,
        leader_id: take(&mut obj, "leader")?,
        modifiers: take(&mut obj, "mods")?,
    })
}

/// Parses a status line.
pub fn decode_status(line: &str) -> Result<TbsStatus, TbsError> {
    let mut obj = parse_object(line, &STATUS_KEYS)?;
    Ok(TbsStatus {
        ref_msg_id: take(&mut obj, "ref")?,
        robot_id: take(&mut obj, "robot")?,
        phase: take(&mut obj, "phase")?,
        detail: take(&mut obj, "detail")?,
        pose: take(&mut obj, "pose")?,
        detections: take(&mut obj, "detections")?,
        time: finite(take(&mut obj, "t")?, "t")?,
    })
}

use serde::{Deserialize, Serialize};

use crate::world::{closest_on_segment, line_of_sight, ObjectClass, ObjectOfInterest, Point2, Point3, WorldMap};

use super::{RobotKind, RobotState};

/// One object seen by one robot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detection {
    pub object_id: String,
    pub class: ObjectClass,
    pub position: Point2,
    pub confidence: f64,
    #[serde(rename = "t")]
    pub time: f64,
    #[serde(rename = "robot")]
    pub robot_id: String,
}

/// Geometric visibility test for one object, ignoring noise.
///
/// The robot's sensor sweeps the segment it covered during the last tick, so
/// nothing passes between samples unseen. Ground robots see within their
/// sensor radius; airborne robots see the camera footprint below them. Either
/// way the line of sight must be clear of buildings.
pub fn can_see(robot: &RobotState, object: Point2, map: &WorldMap) -> bool {
    let reach = match robot.spec.kind {
        RobotKind::Ground => robot.spec.sensor_radius,
        RobotKind::Aerial => {
            if !robot.airborne || robot.altitude <= 0.0 {
                return false;
            }
            robot.spec.footprint_radius(robot.altitude)
        }
    };
    let (dist, eye) = closest_on_segment(object, robot.prev_position, robot.position);
    dist <= reach
        && line_of_sight(
            Point3::new(eye.x, eye.y, robot.altitude),
            Point3::new(object.x, object.y, 0.0),
            map,
        )
}

/// Objects currently visible to `robot`, in map order.
pub fn sense(robot: &RobotState, objects: &[ObjectOfInterest], map: &WorldMap, time: f64) -> Vec<Detection> {
    objects
        .iter()
        .filter(|o| can_see(robot, o.position, map))
        .map(|o| Detection {
            object_id: o.id.clone(),
            class: o.class,
            position: o.position,
            confidence: 1.0 - robot.spec.miss_probability,
            time,
            robot_id: robot.spec.id.clone(),
        })
        .collect()
}

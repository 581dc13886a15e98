use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::tbs::ActionKind;
use crate::world::Point2;

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RobotKind {
    Ground,
    Aerial,
}

impl RobotKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RobotKind::Ground => "ground",
            RobotKind::Aerial => "aerial",
        }
    }

    pub fn default_capabilities(self) -> BTreeSet<ActionKind> {
        use ActionKind::*;
        match self {
            RobotKind::Ground => [Goto, Follow, Scout, Search, Patrol, Halt].into_iter().collect(),
            RobotKind::Aerial => ActionKind::ALL.into_iter().collect(),
        }
    }
}

/// Static description of one robot in the roster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpec {
    pub id: String,
    pub display_name: String,
    pub kind: RobotKind,
    pub capabilities: BTreeSet<ActionKind>,
    pub start: Point2,
    pub speed_normal: f64,
    pub speed_urgent: f64,
    /// Ground detection radius, meters.
    pub sensor_radius: f64,
    /// Half-angle of the downward camera cone, degrees (aerial only).
    pub fov_half_angle_deg: f64,
    pub cruise_altitude: f64,
    /// Vertical speed for takeoff and landing, m/s.
    pub climb_rate: f64,
    /// Probability that an in-range object is missed on a given tick.
    pub miss_probability: f64,
}

impl RobotSpec {
    /// A robot with the default parameters for its kind, starting at the origin.
    pub fn new(id: impl Into<String>, display_name: impl Into<String>, kind: RobotKind) -> Self {
        let (normal, urgent) = match kind {
            RobotKind::Ground => (1.0, 2.0),
            RobotKind::Aerial => (3.0, 6.0),
        };
        Self {
            id: id.into(),
            display_name: display_name.into(),
            kind,
            capabilities: kind.default_capabilities(),
            start: Point2::new(0.0, 0.0),
            speed_normal: normal,
            speed_urgent: urgent,
            sensor_radius: 15.0,
            fov_half_angle_deg: 30.0,
            cruise_altitude: if kind == RobotKind::Aerial { 20.0 } else { 0.0 },
            climb_rate: 4.0,
            miss_probability: 0.0,
        }
    }

    pub fn at(mut self, start: Point2) -> Self {
        self.start = start;
        self
    }

    pub fn with_speeds(mut self, normal: f64, urgent: f64) -> Self {
        self.speed_normal = normal;
        self.speed_urgent = urgent;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |why: &str| Err(SimError::Config(format!("robot {}: {why}", self.id)));
        if self.id.trim().is_empty() {
            return bad("empty id");
        }
        if !(self.speed_normal > 0.0 && self.speed_normal <= self.speed_urgent && self.speed_urgent.is_finite()) {
            return bad("speeds must satisfy 0 < normal <= urgent");
        }
        if !self.start.is_finite() {
            return bad("non-finite start");
        }
        if !(0.0..=1.0).contains(&self.miss_probability) {
            return bad("miss probability must lie in [0, 1]");
        }
        if !(self.sensor_radius >= 0.0 && self.climb_rate > 0.0) {
            return bad("sensor radius and climb rate must be positive");
        }
        match self.kind {
            RobotKind::Ground => {
                if self.capabilities.contains(&ActionKind::Takeoff)
                    || self.capabilities.contains(&ActionKind::Land)
                {
                    return bad("ground robots cannot take off or land");
                }
            }
            RobotKind::Aerial => {
                if !(self.cruise_altitude > 0.0) {
                    return bad("cruise altitude must be positive");
                }
                if !(self.fov_half_angle_deg > 0.0 && self.fov_half_angle_deg < 90.0) {
                    return bad("camera half-angle must lie in (0, 90) degrees");
                }
            }
        }
        Ok(())
    }

    /// Ground radius seen by the downward camera at `altitude`.
    pub fn footprint_radius(&self, altitude: f64) -> f64 {
        altitude.max(0.0) * self.fov_half_angle_deg.to_radians().tan()
    }

    /// Sensing reach at working height: ground radius or camera footprint at cruise.
    pub fn working_reach(&self) -> f64 {
        match self.kind {
            RobotKind::Ground => self.sensor_radius,
            RobotKind::Aerial => self.footprint_radius(self.cruise_altitude),
        }
    }
}

/// Roster entry as written in the scenario file; unset fields take the
/// defaults for the robot's kind.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotDoc {
    id: String,
    display_name: String,
    kind: RobotKind,
    capabilities: Option<BTreeSet<ActionKind>>,
    start: Option<Point2>,
    speed_normal: Option<f64>,
    speed_urgent: Option<f64>,
    sensor_radius: Option<f64>,
    fov_half_angle_deg: Option<f64>,
    cruise_altitude: Option<f64>,
    climb_rate: Option<f64>,
    miss_probability: Option<f64>,
}

impl From<RobotDoc> for RobotSpec {
    fn from(d: RobotDoc) -> Self {
        let base = RobotSpec::new(d.id, d.display_name, d.kind);
        RobotSpec {
            capabilities: d.capabilities.unwrap_or(base.capabilities.clone()),
            start: d.start.unwrap_or(base.start),
            speed_normal: d.speed_normal.unwrap_or(base.speed_normal),
            speed_urgent: d.speed_urgent.unwrap_or(base.speed_urgent),
            sensor_radius: d.sensor_radius.unwrap_or(base.sensor_radius),
            fov_half_angle_deg: d.fov_half_angle_deg.unwrap_or(base.fov_half_angle_deg),
            cruise_altitude: d.cruise_altitude.unwrap_or(base.cruise_altitude),
            climb_rate: d.climb_rate.unwrap_or(base.climb_rate),
            miss_probability: d.miss_probability.unwrap_or(base.miss_probability),
            ..base
        }
    }
}

/// Tunables of the compiled behaviors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BehaviorParams {
    pub arrival_tolerance: f64,
    pub snap_distance: f64,
    /// A landing site this close to a detected person allows perching.
    pub perch_radius: f64,
    pub observe_duration: f64,
    pub hover_standoff: f64,
    pub follow_distance: f64,
    /// Boustrophedon lane spacing as a multiple of the sensing reach.
    pub lane_spacing_factor: f64,
    /// LAND looks for a landing site within this radius.
    pub landing_radius: f64,
}

impl Default for BehaviorParams {
    fn default() -> Self {
        Self {
            arrival_tolerance: 0.5,
            snap_distance: 5.0,
            perch_radius: 15.0,
            observe_duration: 10.0,
            hover_standoff: 10.0,
            follow_distance: 5.0,
            lane_spacing_factor: 1.5,
            landing_radius: 15.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DialogueParams {
    /// Retrieval scores below this are treated as off-topic.
    pub threshold: f64,
}

impl Default for DialogueParams {
    fn default() -> Self {
        Self { threshold: 0.35 }
    }
}

/// Scenario configuration file: seed, tick, tunables and the robot roster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_tick")]
    pub tick: f64,
    /// Headless runs stop after this many simulated seconds.
    #[serde(default = "default_timeout")]
    pub timeout: f64,
    #[serde(default)]
    pub behavior: BehaviorParams,
    #[serde(default)]
    pub dialogue: DialogueParams,
    #[serde(deserialize_with = "robots_from_docs")]
    pub robots: Vec<RobotSpec>,
}

fn default_seed() -> u64 {
    42
}
fn default_tick() -> f64 {
    0.1
}
fn default_timeout() -> f64 {
    600.0
}

fn robots_from_docs<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<RobotSpec>, D::Error> {
    let docs: Vec<RobotDoc> = Deserialize::deserialize(d)?;
    Ok(docs.into_iter().map(RobotSpec::from).collect())
}

impl ScenarioConfig {
    pub fn new(robots: Vec<RobotSpec>) -> Self {
        Self {
            seed: default_seed(),
            tick: default_tick(),
            timeout: default_timeout(),
            behavior: BehaviorParams::default(),
            dialogue: DialogueParams::default(),
            robots,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let cfg: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.tick > 0.0 && self.tick.is_finite()) {
            return Err(SimError::Config("tick must be positive".into()));
        }
        if self.robots.is_empty() {
            return Err(SimError::Config("roster is empty".into()));
        }
        let mut ids = BTreeSet::new();
        for r in &self.robots {
            r.validate()?;
            if !ids.insert(r.id.to_lowercase()) {
                return Err(SimError::Config(format!("duplicate robot id {}", r.id)));
            }
        }
        Ok(())
    }

    pub fn robot(&self, id: &str) -> Option<&RobotSpec> {
        self.robots.iter().find(|r| r.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in_by_kind() {
        let cfg = ScenarioConfig::from_json(
            r#"{"robots":[{"id":"husky","display_name":"Husky","kind":"ground"},
                          {"id":"snapdragon","display_name":"Snapdragon","kind":"aerial","speed_normal":2.5}]}"#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.tick, 0.1);
        let h = cfg.robot("husky").unwrap();
        assert_eq!((h.speed_normal, h.speed_urgent), (1.0, 2.0));
        assert!(!h.capabilities.contains(&ActionKind::Takeoff));
        let s = cfg.robot("snapdragon").unwrap();
        assert_eq!((s.speed_normal, s.speed_urgent), (2.5, 6.0));
        assert_eq!(s.cruise_altitude, 20.0);
    }

    #[test]
    fn rejects_bad_rosters() {
        let dup = r#"{"robots":[{"id":"a","display_name":"A","kind":"ground"},{"id":"a","display_name":"B","kind":"ground"}]}"#;
        assert!(ScenarioConfig::from_json(dup).is_err());
        let slow = r#"{"robots":[{"id":"a","display_name":"A","kind":"ground","speed_normal":3,"speed_urgent":2}]}"#;
        assert!(ScenarioConfig::from_json(slow).is_err());
        let flying_husky = r#"{"robots":[{"id":"a","display_name":"A","kind":"ground","capabilities":["GOTO","TAKEOFF"]}]}"#;
        assert!(ScenarioConfig::from_json(flying_husky).is_err());
        let extra = r#"{"robots":[{"id":"a","display_name":"A","kind":"ground","wheels":4}]}"#;
        assert!(ScenarioConfig::from_json(extra).is_err());
    }

    #[test]
    fn footprint_geometry() {
        let s = RobotSpec::new("s", "S", RobotKind::Aerial);
        let r = s.footprint_radius(20.0);
        assert!((r - 20.0 * (30f64).to_radians().tan()).abs() < 1e-12);
        assert!(r > 11.54 && r < 11.55);
    }
}

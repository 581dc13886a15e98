//! Deterministic discrete-time simulation of the robot team.
//!
//! [`SimState::step`] advances every robot by one tick: first kinematics, then
//! one tick of the robot's active behavior machine. Robots are processed in
//! roster order, so the event log is a pure function of the map, the config
//! (including its seed) and the sequence of assigned commands.

mod config;
mod sensing;

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::{self, BehaviorError, Outcome, StateMachine, TickContext, TickStatus};
use crate::tbs::{ActionKind, Pose, TbsMessage, TbsStatus, Urgency};
use crate::world::{ObjectOfInterest, Path, Point2, WorldMap};

pub use config::{BehaviorParams, DialogueParams, RobotKind, RobotSpec, ScenarioConfig};
pub use sensing::{can_see, sense, Detection};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid scenario config: {0}")]
    Config(String),
    #[error("unknown robot `{0}`")]
    UnknownRobot(String),
    #[error("{0} is landed and cannot move horizontally")]
    NotAirborne(String),
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Motion {
    points: Vec<Point2>,
    next: usize,
    speed: f64,
}

impl Motion {
    pub fn goal(&self) -> Point2 {
        *self.points.last().expect("motion has points")
    }

    /// Points not yet reached, in order.
    pub fn remaining(&self) -> &[Point2] {
        &self.points[self.next.min(self.points.len())..]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveTask {
    pub msg: TbsMessage,
    pub machine: StateMachine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    pub spec: RobotSpec,
    pub position: Point2,
    /// Position at the start of the current tick; sensors sweep from here.
    pub prev_position: Point2,
    pub heading: f64,
    pub altitude: f64,
    pub airborne: bool,
    /// Total horizontal distance travelled, meters.
    pub odometer: f64,
    motion: Option<Motion>,
    vertical_target: Option<f64>,
    active_task: Option<Box<ActiveTask>>,
}

impl RobotState {
    pub fn new(spec: RobotSpec) -> Self {
        Self {
            position: spec.start,
            prev_position: spec.start,
            heading: 0.0,
            altitude: 0.0,
            airborne: false,
            odometer: 0.0,
            motion: None,
            vertical_target: None,
            active_task: None,
            spec,
        }
    }

    pub fn id(&self) -> &str {
        &self.spec.id
    }

    pub fn kind(&self) -> RobotKind {
        self.spec.kind
    }

    pub fn pose(&self) -> Pose {
        Pose {
            x: self.position.x,
            y: self.position.y,
            alt: self.altitude,
        }
    }

    pub fn speed_for(&self, urgency: Urgency) -> f64 {
        match urgency {
            Urgency::Normal => self.spec.speed_normal,
            Urgency::Urgent => self.spec.speed_urgent,
        }
    }

    pub fn motion(&self) -> Option<&Motion> {
        self.motion.as_ref()
    }

    pub fn is_moving(&self) -> bool {
        self.motion.is_some()
    }

    pub fn is_climbing(&self) -> bool {
        self.vertical_target.is_some()
    }

    pub fn active_task(&self) -> Option<&ActiveTask> {
        self.active_task.as_deref()
    }

    pub fn is_busy(&self) -> bool {
        self.active_task.is_some()
    }

    /// Starts following `path` at the speed for `urgency`.
    pub fn set_motion(&mut self, path: &Path, urgency: Urgency) -> Result<(), SimError> {
        if self.spec.kind == RobotKind::Aerial && !self.airborne && path.length() > 1e-9 {
            return Err(SimError::NotAirborne(self.spec.display_name.clone()));
        }
        let points = path.points().to_vec();
        if let Some(p) = points.iter().find(|p| p.distance(self.position) > 1e-9) {
            self.heading = self.position.heading_to(*p);
        }
        self.motion = Some(Motion {
            points,
            next: 0,
            speed: self.speed_for(urgency),
        });
        Ok(())
    }

    pub fn cancel_motion(&mut self) {
        self.motion = None;
    }

    /// Begins a climb to cruise altitude. Ground robots ignore this.
    pub fn start_takeoff(&mut self) {
        if self.spec.kind == RobotKind::Aerial {
            self.motion = None;
            self.airborne = true;
            self.vertical_target = Some(self.spec.cruise_altitude);
        }
    }

    pub fn start_landing(&mut self) {
        if self.spec.kind == RobotKind::Aerial && self.airborne {
            self.motion = None;
            self.vertical_target = Some(0.0);
        }
    }

    /// Advances horizontal and vertical motion by one tick.
    fn advance(&mut self, dt: f64, time: f64, events: &mut Vec<SimEvent>) {
        self.prev_position = self.position;
        if let Some(target) = self.vertical_target {
            let step = self.spec.climb_rate * dt;
            if (target - self.altitude).abs() <= step + 1e-12 {
                self.altitude = target;
                self.vertical_target = None;
                if target <= 0.0 {
                    self.airborne = false;
                    events.push(SimEvent::new(time, self, EventKind::Landed));
                } else {
                    events.push(SimEvent::new(time, self, EventKind::TookOff));
                }
            } else {
                self.altitude += step * (target - self.altitude).signum();
            }
        }
        let Some(motion) = self.motion.as_mut() else {
            return;
        };
        let mut budget = motion.speed * dt;
        while let Some(&target) = motion.points.get(motion.next) {
            let d = self.position.distance(target);
            if d <= budget + 1e-12 {
                self.position = target;
                self.odometer += d;
                budget = (budget - d).max(0.0);
                motion.next += 1;
            } else {
                self.heading = self.position.heading_to(target);
                self.position = self.position.lerp(target, budget / d);
                self.odometer += budget;
                break;
            }
        }
        if motion.next >= motion.points.len() {
            self.motion = None;
            events.push(SimEvent::new(time, self, EventKind::Arrived));
        }
    }
}

/// Pose of a robot as seen by other robots' behaviors.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotPose {
    pub id: String,
    pub position: Point2,
    pub heading: f64,
    pub altitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Arrived,
    Detected { detection: Detection },
    TookOff,
    Landed,
    Perched { site: Point2 },
    BehaviorOutcome { msg_id: String, outcome: Outcome },
    StatusEmitted { status: TbsStatus },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    #[serde(rename = "t")]
    pub time: f64,
    #[serde(rename = "robot")]
    pub robot_id: String,
    pub pose: Pose,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl SimEvent {
    pub fn new(time: f64, robot: &RobotState, kind: EventKind) -> Self {
        Self {
            time,
            robot_id: robot.spec.id.clone(),
            pose: robot.pose(),
            kind,
        }
    }

    pub fn status(&self) -> Option<&TbsStatus> {
        match &self.kind {
            EventKind::StatusEmitted { status } => Some(status),
            _ => None,
        }
    }
}

/// Read-only view of a robot for consoles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotSnapshot {
    pub id: String,
    pub display_name: String,
    pub kind: RobotKind,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub altitude: f64,
    pub airborne: bool,
    pub busy: bool,
    pub task: Option<String>,
    pub action: Option<ActionKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    #[serde(rename = "t")]
    pub time: f64,
    pub robots: Vec<RobotSnapshot>,
    pub discovered: Vec<String>,
}

/// Whole simulation: map, robots, clock, seeded noise and the event log.
#[derive(Debug, Clone)]
pub struct SimState {
    map: Arc<WorldMap>,
    config: ScenarioConfig,
    robots: Vec<RobotState>,
    objects: Vec<ObjectOfInterest>,
    clock: f64,
    rng: ChaCha8Rng,
    event_log: Vec<SimEvent>,
}

impl SimState {
    pub fn new(map: Arc<WorldMap>, config: ScenarioConfig) -> Result<Self, SimError> {
        config.validate()?;
        let robots = config.robots.iter().cloned().map(RobotState::new).collect();
        Ok(Self {
            objects: map.objects().to_vec(),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            map,
            config,
            robots,
            clock: 0.0,
            event_log: Vec::new(),
        })
    }

    pub fn map(&self) -> &WorldMap {
        &self.map
    }
    pub fn map_arc(&self) -> Arc<WorldMap> {
        Arc::clone(&self.map)
    }
    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }
    pub fn clock(&self) -> f64 {
        self.clock
    }
    pub fn robots(&self) -> &[RobotState] {
        &self.robots
    }
    pub fn objects(&self) -> &[ObjectOfInterest] {
        &self.objects
    }
    pub fn event_log(&self) -> &[SimEvent] {
        &self.event_log
    }
    pub fn robot(&self, id: &str) -> Option<&RobotState> {
        self.robots.iter().find(|r| r.spec.id == id)
    }
    pub fn robot_mut(&mut self, id: &str) -> Option<&mut RobotState> {
        self.robots.iter_mut().find(|r| r.spec.id == id)
    }
    fn index_of(&self, id: &str) -> Result<usize, SimError> {
        self.robots
            .iter()
            .position(|r| r.spec.id == id)
            .ok_or_else(|| SimError::UnknownRobot(id.to_string()))
    }

    pub fn all_idle(&self) -> bool {
        self.robots.iter().all(|r| r.active_task.is_none())
    }

    /// Objects visible to one robot right now (noise-free).
    pub fn sense(&self, robot_id: &str) -> Result<Vec<Detection>, SimError> {
        let robot = &self.robots[self.index_of(robot_id)?];
        Ok(sense(robot, &self.objects, &self.map, self.clock))
    }

    fn poses(&self) -> Vec<RobotPose> {
        self.robots
            .iter()
            .map(|r| RobotPose {
                id: r.spec.id.clone(),
                position: r.position,
                heading: r.heading,
                altitude: r.altitude,
            })
            .collect()
    }

    /// Ticks robot `i`'s machine once; clears the task when it terminates.
    fn tick_task(&mut self, i: usize, dt: f64, events: &mut Vec<SimEvent>) {
        let Some(mut task) = self.robots[i].active_task.take() else {
            return;
        };
        let poses = self.poses();
        let mut ctx = TickContext {
            map: &self.map,
            params: &self.config.behavior,
            clock: self.clock,
            dt,
            robots: &poses,
            objects: &mut self.objects,
            rng: &mut self.rng,
            events,
        };
        let robot = &mut self.robots[i];
        match task.machine.tick(robot, &mut ctx) {
            Ok(TickStatus::Running) => robot.active_task = Some(task),
            Ok(TickStatus::Done(_)) | Err(_) => {}
        }
    }

    /// Installs a command on its robot. A busy robot's current task is
    /// preempted and resolves as interrupted before the new one is accepted.
    pub fn assign(&mut self, msg: TbsMessage) -> Result<Vec<SimEvent>, SimError> {
        let i = self.index_of(&msg.robot_id)?;
        let mut machine = behavior::compile(&msg, &self.map, &self.robots[i].spec)?;
        let mut events = Vec::new();
        if let Some(old) = self.robots[i].active_task.as_mut() {
            old.machine.preempt()?;
            self.robots[i].cancel_motion();
            self.tick_task(i, self.config.tick, &mut events);
        }
        let robot = &mut self.robots[i];
        if msg.action == ActionKind::Halt {
            robot.cancel_motion();
        }
        machine.accept(robot, self.clock, &mut events);
        robot.active_task = Some(Box::new(ActiveTask { msg, machine }));
        self.event_log.extend(events.iter().cloned());
        Ok(events)
    }

    /// Requests preemption of a robot's task; it resolves on the next tick.
    pub fn preempt(&mut self, robot_id: &str) -> Result<(), SimError> {
        let i = self.index_of(robot_id)?;
        let robot = &mut self.robots[i];
        if let Some(task) = robot.active_task.as_mut() {
            task.machine.preempt()?;
            robot.cancel_motion();
        }
        Ok(())
    }

    /// Advances the world by `dt` seconds.
    ///
    /// # Panics
    /// If `dt` is not positive.
    pub fn step(&mut self, dt: f64) -> Vec<SimEvent> {
        assert!(dt > 0.0, "tick must be positive");
        self.clock += dt;
        let mut events = Vec::new();
        for i in 0..self.robots.len() {
            let time = self.clock;
            self.robots[i].advance(dt, time, &mut events);
            self.tick_task(i, dt, &mut events);
        }
        self.event_log.extend(events.iter().cloned());
        events
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            time: self.clock,
            robots: self
                .robots
                .iter()
                .map(|r| RobotSnapshot {
                    id: r.spec.id.clone(),
                    display_name: r.spec.display_name.clone(),
                    kind: r.spec.kind,
                    x: r.position.x,
                    y: r.position.y,
                    heading: r.heading,
                    altitude: r.altitude,
                    airborne: r.airborne,
                    busy: r.active_task.is_some(),
                    task: r.active_task.as_ref().map(|t| t.msg.msg_id.clone()),
                    action: r.active_task.as_ref().map(|t| t.msg.action),
                })
                .collect(),
            discovered: self
                .objects
                .iter()
                .filter(|o| o.discovered)
                .map(|o| o.id.clone())
                .collect(),
        }
    }
}

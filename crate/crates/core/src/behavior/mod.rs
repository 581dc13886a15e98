//! Outcome-typed state machines compiled from TBS commands.
//!
//! Each state runs one primitive [`Step`] and maps the step's result to the
//! next state or to a terminal [`Outcome`]. Machines are checked at build
//! time: every result a step can produce has a transition, every target
//! exists and every state is reachable from the initial one.

mod compile;
pub mod coverage;
mod steps;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{BehaviorParams, Detection, EventKind, RobotPose, RobotState, SimEvent};
use crate::tbs::{make_status, ActionKind, StatusPhase, StatusTracker, Urgency};
use crate::world::{ObjectClass, ObjectOfInterest, Path, Point2, WorldMap};

pub use compile::compile;

/// Maximum state transitions followed within a single tick.
const MAX_TRANSITIONS_PER_TICK: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BehaviorError {
    #[error("{robot} cannot perform {action}")]
    UnsupportedCapability { robot: String, action: ActionKind },
    #[error("unknown {0}")]
    UnknownEntity(String),
    #[error("machine already terminated")]
    AlreadyTerminal,
    #[error("malformed state machine: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Succeeded,
    Failed,
    Interrupted,
}

impl Outcome {
    pub fn phase(self) -> StatusPhase {
        match self {
            Outcome::Succeeded => StatusPhase::Completed,
            Outcome::Failed => StatusPhase::Failed,
            Outcome::Interrupted => StatusPhase::Interrupted,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Succeeded => "succeeded",
            Outcome::Failed => "failed",
            Outcome::Interrupted => "interrupted",
        })
    }
}

/// Result of one primitive step, used to pick the next transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeResult {
    Done,
    Failed,
    /// A target-class object was detected while sweeping.
    Detected,
    SiteNearby,
    NoSite,
}

/// Primitive behavior steps.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    /// Climb to cruise altitude if landed; no-op for ground robots.
    EnsureAirborne,
    PlanTo { goal: Point2 },
    PlanRoute { route: String },
    PlanCoverage { area: String },
    PlanLoop { area: String },
    /// Follow the planned path to its end.
    Traverse,
    /// Follow the planned path while detecting; `react` stops on a target.
    Sweep { react: bool },
    CheckSite,
    PlanToSite,
    Land { perch: bool },
    /// LAND command: move to a nearby landing site if any, then descend.
    LandNearest,
    Observe,
    HoverObserve,
    Report,
    Resume,
    AcquireLeader { leader: String },
    Track { leader: String },
    Halt,
}

impl Step {
    /// Every result this step can return.
    pub fn results(&self) -> &'static [NodeResult] {
        use NodeResult::*;
        match self {
            Step::EnsureAirborne
            | Step::Land { .. }
            | Step::LandNearest
            | Step::Observe
            | Step::Report
            | Step::Halt => &[Done],
            Step::PlanTo { .. }
            | Step::PlanRoute { .. }
            | Step::PlanCoverage { .. }
            | Step::PlanLoop { .. }
            | Step::PlanToSite
            | Step::Traverse
            | Step::HoverObserve
            | Step::Resume
            | Step::AcquireLeader { .. }
            | Step::Sweep { react: false } => &[Done, Failed],
            Step::Sweep { react: true } => &[Done, Failed, Detected],
            Step::CheckSite => &[SiteNearby, NoSite],
            Step::Track { .. } => &[Failed],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transition {
    To(String),
    End(Outcome),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateNode {
    pub name: String,
    pub step: Step,
    pub transitions: BTreeMap<NodeResult, Transition>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Current {
    State(String),
    Terminal(Outcome),
}

/// What a tick left the machine in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TickStatus {
    Running,
    Done(Outcome),
}

/// Everything a machine may read or write during one tick besides its robot.
pub struct TickContext<'a> {
    pub map: &'a WorldMap,
    pub params: &'a BehaviorParams,
    pub clock: f64,
    pub dt: f64,
    pub robots: &'a [RobotPose],
    pub objects: &'a mut [ObjectOfInterest],
    pub rng: &'a mut ChaCha8Rng,
    pub events: &'a mut Vec<SimEvent>,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Blackboard {
    entered: bool,
    stage: u8,
    path: Option<Path>,
    resume: Vec<Point2>,
    target: Option<Detection>,
    site: Option<Point2>,
    until: Option<f64>,
    seen: BTreeSet<String>,
    failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateMachine {
    task_ref: String,
    action: ActionKind,
    urgency: Urgency,
    target_class: ObjectClass,
    states: BTreeMap<String, StateNode>,
    initial: String,
    current: Current,
    preempted: bool,
    started: bool,
    visited: Vec<String>,
    board: Blackboard,
    tracker: StatusTracker,
}

pub(crate) struct MachineSpec {
    pub task_ref: String,
    pub robot_id: String,
    pub action: ActionKind,
    pub urgency: Urgency,
    pub target_class: ObjectClass,
}

impl StateMachine {
    pub(crate) fn build(
        spec: MachineSpec,
        states: Vec<StateNode>,
        initial: &str,
    ) -> Result<Self, BehaviorError> {
        let states: BTreeMap<String, StateNode> =
            states.into_iter().map(|s| (s.name.clone(), s)).collect();
        if !states.contains_key(initial) {
            return Err(BehaviorError::Malformed(format!("missing initial state {initial}")));
        }
        for node in states.values() {
            for r in node.step.results() {
                match node.transitions.get(r) {
                    None => {
                        return Err(BehaviorError::Malformed(format!(
                            "state {} has no transition for {r:?}",
                            node.name
                        )))
                    }
                    Some(Transition::To(t)) if !states.contains_key(t) => {
                        return Err(BehaviorError::Malformed(format!(
                            "state {} targets unknown state {t}",
                            node.name
                        )))
                    }
                    _ => {}
                }
            }
        }
        let mut reachable = BTreeSet::from([initial.to_string()]);
        let mut frontier = vec![initial.to_string()];
        while let Some(name) = frontier.pop() {
            for t in states[&name].transitions.values() {
                if let Transition::To(next) = t {
                    if reachable.insert(next.clone()) {
                        frontier.push(next.clone());
                    }
                }
            }
        }
        if let Some(orphan) = states.keys().find(|k| !reachable.contains(*k)) {
            return Err(BehaviorError::Malformed(format!("unreachable state {orphan}")));
        }
        Ok(Self {
            tracker: StatusTracker::new(&spec.task_ref, &spec.robot_id),
            task_ref: spec.task_ref,
            action: spec.action,
            urgency: spec.urgency,
            target_class: spec.target_class,
            states,
            initial: initial.to_string(),
            current: Current::State(initial.to_string()),
            preempted: false,
            started: false,
            visited: Vec::new(),
            board: Blackboard::default(),
        })
    }

    pub fn task_ref(&self) -> &str {
        &self.task_ref
    }
    pub fn action(&self) -> ActionKind {
        self.action
    }
    pub fn initial(&self) -> &str {
        &self.initial
    }
    pub fn current(&self) -> &Current {
        &self.current
    }
    pub fn states(&self) -> impl Iterator<Item = &StateNode> {
        self.states.values()
    }
    pub fn state_names(&self) -> BTreeSet<&str> {
        self.states.keys().map(String::as_str).collect()
    }
    /// States entered so far, in order (repeats included).
    pub fn visited(&self) -> &[String] {
        &self.visited
    }
    pub fn is_terminal(&self) -> bool {
        matches!(self.current, Current::Terminal(_))
    }
    pub fn outcome(&self) -> Option<Outcome> {
        match self.current {
            Current::Terminal(o) => Some(o),
            Current::State(_) => None,
        }
    }
    pub fn tracker(&self) -> &StatusTracker {
        &self.tracker
    }

    /// Terminal outcomes reachable from the transition table.
    pub fn terminal_outcomes(&self) -> BTreeSet<Outcome> {
        let mut out: BTreeSet<Outcome> = self
            .states
            .values()
            .flat_map(|s| s.transitions.values())
            .filter_map(|t| match t {
                Transition::End(o) => Some(*o),
                Transition::To(_) => None,
            })
            .collect();
        out.insert(Outcome::Interrupted);
        out
    }

    /// Emits the `accepted` status for this task.
    pub fn accept(&mut self, robot: &RobotState, clock: f64, events: &mut Vec<SimEvent>) {
        self.emit(robot, clock, events, StatusPhase::Accepted, "accepted".into());
    }

    /// Requests interruption; the machine resolves on its next tick.
    pub fn preempt(&mut self) -> Result<(), BehaviorError> {
        if self.is_terminal() {
            return Err(BehaviorError::AlreadyTerminal);
        }
        self.preempted = true;
        Ok(())
    }

    pub fn is_preempted(&self) -> bool {
        self.preempted
    }

    fn emit(
        &mut self,
        robot: &RobotState,
        clock: f64,
        events: &mut Vec<SimEvent>,
        phase: StatusPhase,
        detail: String,
    ) {
        // Every emitter in this module respects the phase order.
        let status = make_status(&mut self.tracker, phase, detail, robot.pose(), clock)
            .expect("status phases are emitted in order");
        events.push(SimEvent::new(clock, robot, EventKind::StatusEmitted { status }));
    }

    fn finish(&mut self, outcome: Outcome, robot: &mut RobotState, ctx: &mut TickContext<'_>) {
        if outcome != Outcome::Succeeded {
            robot.cancel_motion();
        }
        let detail = match outcome {
            Outcome::Succeeded => "succeeded".to_string(),
            Outcome::Failed => self.board.failure.clone().unwrap_or_else(|| "failed".into()),
            Outcome::Interrupted => "interrupted".to_string(),
        };
        self.emit(robot, ctx.clock, ctx.events, outcome.phase(), detail);
        ctx.events.push(SimEvent::new(
            ctx.clock,
            robot,
            EventKind::BehaviorOutcome {
                msg_id: self.task_ref.clone(),
                outcome,
            },
        ));
        self.current = Current::Terminal(outcome);
    }

    /// Runs the current state against the simulation for one tick.
    pub fn tick(&mut self, robot: &mut RobotState, ctx: &mut TickContext<'_>) -> Result<TickStatus, BehaviorError> {
        if self.is_terminal() {
            return Err(BehaviorError::AlreadyTerminal);
        }
        if self.tracker.last_phase().is_none() {
            self.accept(robot, ctx.clock, ctx.events);
        }
        if !self.started {
            self.started = true;
            let detail = format!("started {}", self.action.verb());
            self.emit(robot, ctx.clock, ctx.events, StatusPhase::Started, detail);
        }
        if self.preempted {
            self.finish(Outcome::Interrupted, robot, ctx);
            return Ok(TickStatus::Done(Outcome::Interrupted));
        }
        for _ in 0..MAX_TRANSITIONS_PER_TICK {
            let Current::State(name) = &self.current else {
                unreachable!("checked above");
            };
            let node = &self.states[name];
            let first = !self.board.entered;
            if first {
                self.visited.push(node.name.clone());
                self.board.entered = true;
            }
            let step = node.step.clone();
            let Some(result) = self.run_step(&step, first, robot, ctx) else {
                return Ok(TickStatus::Running);
            };
            let Current::State(name) = &self.current else {
                unreachable!("steps never terminate the machine");
            };
            let next = self.states[name].transitions[&result].clone();
            self.board.entered = false;
            self.board.stage = 0;
            match next {
                Transition::To(state) => self.current = Current::State(state),
                Transition::End(outcome) => {
                    self.finish(outcome, robot, ctx);
                    return Ok(TickStatus::Done(outcome));
                }
            }
        }
        Ok(TickStatus::Running)
    }
}

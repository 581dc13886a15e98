use std::collections::BTreeMap;

use crate::sim::{RobotKind, RobotSpec};
use crate::tbs::{ActionKind, TbsMessage};
use crate::world::WorldMap;

use super::{BehaviorError, MachineSpec, NodeResult, Outcome, StateMachine, StateNode, Step, Transition};

use NodeResult::*;

fn to(state: &str) -> Transition {
    Transition::To(state.to_string())
}

const SUCCEEDED: Transition = Transition::End(Outcome::Succeeded);
const FAILED: Transition = Transition::End(Outcome::Failed);

#[derive(Default)]
struct Builder {
    states: Vec<StateNode>,
}

impl Builder {
    fn state(&mut self, name: &str, step: Step, transitions: &[(NodeResult, Transition)]) -> &mut Self {
        self.states.push(StateNode {
            name: name.to_string(),
            step,
            transitions: transitions.iter().cloned().collect::<BTreeMap<_, _>>(),
        });
        self
    }

    /// Prepends a takeoff state for aerial robots; returns the entry state.
    fn airborne_then(&mut self, aerial: bool, next: &'static str) -> &'static str {
        if aerial {
            self.state("takeoff", Step::EnsureAirborne, &[(Done, to(next))]);
            "takeoff"
        } else {
            next
        }
    }
}

fn location_name<'m>(msg: &'m TbsMessage, kind: &str) -> Result<&'m str, BehaviorError> {
    msg.location
        .as_ref()
        .and_then(|l| l.name())
        .ok_or_else(|| BehaviorError::UnknownEntity(format!("{kind} for {}", msg.action)))
}

/// Builds the state machine that carries out `msg` on `robot`.
///
/// | action  | states |
/// |---------|--------|
/// | GOTO    | \[takeoff] → plan → traverse |
/// | SCOUT   | \[takeoff] → plan_route → sweep_route, branching on a detection to perch-and-stare or hover-observe, then report → resume |
/// | SEARCH  | \[takeoff] → plan_coverage → sweep |
/// | PATROL  | \[takeoff] → plan_loop ⇄ patrol (until interrupted) |
/// | FOLLOW  | \[takeoff] → acquire → track (until interrupted) |
/// | TAKEOFF / LAND / HALT | single altitude or stop step |
pub fn compile(msg: &TbsMessage, map: &WorldMap, robot: &RobotSpec) -> Result<StateMachine, BehaviorError> {
    if !robot.capabilities.contains(&msg.action) {
        return Err(BehaviorError::UnsupportedCapability {
            robot: robot.display_name.clone(),
            action: msg.action,
        });
    }
    let aerial = robot.kind == RobotKind::Aerial;
    let mut b = Builder::default();
    let initial = match msg.action {
        ActionKind::Goto => {
            let loc = msg
                .location
                .as_ref()
                .ok_or_else(|| BehaviorError::UnknownEntity("destination for GOTO".into()))?;
            let goal = map
                .location_point(loc)
                .map_err(|_| BehaviorError::UnknownEntity(format!("location {}", loc.label())))?;
            b.state("plan", Step::PlanTo { goal }, &[(Done, to("traverse")), (Failed, FAILED)])
                .state("traverse", Step::Traverse, &[(Done, SUCCEEDED), (Failed, FAILED)]);
            b.airborne_then(aerial, "plan")
        }
        ActionKind::Scout => {
            let route = location_name(msg, "route")?;
            if map.route(route).is_none() {
                return Err(BehaviorError::UnknownEntity(format!("route {route}")));
            }
            let route = route.to_string();
            b.state("plan_route", Step::PlanRoute { route }, &[(Done, to("sweep_route")), (Failed, FAILED)]);
            if aerial {
                b.state(
                    "sweep_route",
                    Step::Sweep { react: true },
                    &[(Done, SUCCEEDED), (Failed, FAILED), (Detected, to("check_site"))],
                )
                .state("check_site", Step::CheckSite, &[(SiteNearby, to("goto_site")), (NoSite, to("hover_observe"))])
                .state("goto_site", Step::PlanToSite, &[(Done, to("fly_to_site")), (Failed, to("hover_observe"))])
                .state("fly_to_site", Step::Traverse, &[(Done, to("perch")), (Failed, FAILED)])
                .state("perch", Step::Land { perch: true }, &[(Done, to("stare"))])
                .state("stare", Step::Observe, &[(Done, to("report"))])
                .state("hover_observe", Step::HoverObserve, &[(Done, to("report")), (Failed, FAILED)])
                .state("report", Step::Report, &[(Done, to("relaunch"))])
                .state("relaunch", Step::EnsureAirborne, &[(Done, to("resume"))])
                .state("resume", Step::Resume, &[(Done, to("sweep_route")), (Failed, FAILED)]);
            } else {
                b.state(
                    "sweep_route",
                    Step::Sweep { react: true },
                    &[(Done, SUCCEEDED), (Failed, FAILED), (Detected, to("observe"))],
                )
                .state("observe", Step::Observe, &[(Done, to("report"))])
                .state("report", Step::Report, &[(Done, to("resume"))])
                .state("resume", Step::Resume, &[(Done, to("sweep_route")), (Failed, FAILED)]);
            }
            b.airborne_then(aerial, "plan_route")
        }
        ActionKind::Search => {
            let area = location_name(msg, "area")?;
            if map.area(area).is_none() {
                return Err(BehaviorError::UnknownEntity(format!("area {area}")));
            }
            let area = area.to_string();
            b.state("plan_coverage", Step::PlanCoverage { area }, &[(Done, to("sweep")), (Failed, FAILED)])
                .state("sweep", Step::Sweep { react: false }, &[(Done, SUCCEEDED), (Failed, FAILED)]);
            b.airborne_then(aerial, "plan_coverage")
        }
        ActionKind::Patrol => {
            let area = location_name(msg, "area")?;
            if map.area(area).is_none() {
                return Err(BehaviorError::UnknownEntity(format!("area {area}")));
            }
            let area = area.to_string();
            b.state("plan_loop", Step::PlanLoop { area }, &[(Done, to("patrol")), (Failed, FAILED)])
                .state("patrol", Step::Sweep { react: false }, &[(Done, to("plan_loop")), (Failed, FAILED)]);
            b.airborne_then(aerial, "plan_loop")
        }
        ActionKind::Follow => {
            let leader = msg
                .leader_id
                .clone()
                .ok_or_else(|| BehaviorError::UnknownEntity("leader for FOLLOW".into()))?;
            if leader == robot.id {
                return Err(BehaviorError::UnknownEntity(format!("leader {leader} (cannot follow itself)")));
            }
            b.state("acquire", Step::AcquireLeader { leader: leader.clone() }, &[(Done, to("track")), (Failed, FAILED)])
                .state("track", Step::Track { leader }, &[(Failed, FAILED)]);
            b.airborne_then(aerial, "acquire")
        }
        ActionKind::Takeoff => {
            b.state("takeoff", Step::EnsureAirborne, &[(Done, SUCCEEDED)]);
            "takeoff"
        }
        ActionKind::Land => {
            b.state("land", Step::LandNearest, &[(Done, SUCCEEDED)]);
            "land"
        }
        ActionKind::Halt => {
            b.state("halt", Step::Halt, &[(Done, SUCCEEDED)]);
            "halt"
        }
    };
    StateMachine::build(
        MachineSpec {
            task_ref: msg.msg_id.clone(),
            robot_id: robot.id.clone(),
            action: msg.action,
            urgency: msg.modifiers.urgency,
            target_class: msg.target_class(),
        },
        b.states,
        initial,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{load_map, LocationRef};

    fn map() -> WorldMap {
        load_map(
            r#"{"name":"m","waypoints":[{"name":"gate","x":0,"y":0},{"name":"b","x":10,"y":0}],
                "edges":[{"from":"gate","to":"b"}],
                "routes":[{"name":"bravo","waypoints":["gate","b"]}],
                "areas":[{"name":"park","polygon":[[0,0],[10,0],[10,10]]}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn ground_goto_is_plan_then_traverse() {
        let husky = RobotSpec::new("husky", "Husky", RobotKind::Ground);
        let msg = TbsMessage::new("m1", 0.0, "husky", ActionKind::Goto).with_location(LocationRef::waypoint("gate"));
        let m = compile(&msg, &map(), &husky).unwrap();
        assert_eq!(m.state_names().into_iter().collect::<Vec<_>>(), vec!["plan", "traverse"]);
        assert_eq!(m.initial(), "plan");
        assert!(m.terminal_outcomes().contains(&Outcome::Succeeded));
        assert!(m.terminal_outcomes().contains(&Outcome::Failed));
    }

    #[test]
    fn aerial_scout_has_perch_and_hover_branches() {
        let drone = RobotSpec::new("snapdragon", "Snapdragon", RobotKind::Aerial);
        let msg = TbsMessage::new("m1", 0.0, "snapdragon", ActionKind::Scout).with_location(LocationRef::route("bravo"));
        let m = compile(&msg, &map(), &drone).unwrap();
        let names = m.state_names();
        for s in ["takeoff", "perch", "stare", "hover_observe", "report", "resume"] {
            assert!(names.contains(s), "missing {s}");
        }
        assert_eq!(m.initial(), "takeoff");
    }

    #[test]
    fn takeoff_on_ground_robot_is_unsupported() {
        let husky = RobotSpec::new("husky", "Husky", RobotKind::Ground);
        let msg = TbsMessage::new("m1", 0.0, "husky", ActionKind::Takeoff);
        assert!(matches!(
            compile(&msg, &map(), &husky),
            Err(BehaviorError::UnsupportedCapability { .. })
        ));
    }

    #[test]
    fn self_follow_and_missing_entities() {
        let husky = RobotSpec::new("husky", "Husky", RobotKind::Ground);
        let msg = TbsMessage::new("m1", 0.0, "husky", ActionKind::Follow).with_leader("husky");
        assert!(matches!(compile(&msg, &map(), &husky), Err(BehaviorError::UnknownEntity(_))));
        let msg = TbsMessage::new("m1", 0.0, "husky", ActionKind::Scout).with_location(LocationRef::route("zulu"));
        assert!(matches!(compile(&msg, &map(), &husky), Err(BehaviorError::UnknownEntity(_))));
    }

    #[test]
    fn patrol_and_follow_never_succeed() {
        let husky = RobotSpec::new("husky", "Husky", RobotKind::Ground);
        let patrol = TbsMessage::new("m1", 0.0, "husky", ActionKind::Patrol).with_location(LocationRef::area("park"));
        let m = compile(&patrol, &map(), &husky).unwrap();
        assert!(!m.terminal_outcomes().contains(&Outcome::Succeeded));
        let follow = TbsMessage::new("m2", 0.0, "husky", ActionKind::Follow).with_leader("snapdragon");
        let m = compile(&follow, &map(), &husky).unwrap();
        assert!(!m.terminal_outcomes().contains(&Outcome::Succeeded));
    }
}

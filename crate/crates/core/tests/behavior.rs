use std::sync::Arc;

use multibot_core::behavior::Outcome;
use multibot_core::sim::{EventKind, RobotKind, RobotSpec, ScenarioConfig, SimEvent, SimState};
use multibot_core::tbs::{ActionKind, StatusPhase, TbsMessage, Urgency};
use multibot_core::world::{load_map, LocationRef, Point2};

fn run_until_idle(sim: &mut SimState, limit: f64) -> Vec<SimEvent> {
    let mut events = Vec::new();
    while !sim.all_idle() && sim.clock() < limit {
        events.extend(sim.step(0.1));
    }
    events
}

fn outcome(events: &[SimEvent]) -> Option<Outcome> {
    events.iter().find_map(|e| match &e.kind {
        EventKind::BehaviorOutcome { outcome, .. } => Some(*outcome),
        _ => None,
    })
}

fn line_map(extra: &str) -> Arc<multibot_core::world::WorldMap> {
    let doc = format!(
        r#"{{"name":"line",
            "waypoints":[{{"name":"a","x":0,"y":0}},{{"name":"b","x":50,"y":0}},{{"name":"c","x":100,"y":0}}],
            "edges":[{{"from":"a","to":"b"}},{{"from":"b","to":"c"}}],
            "routes":[{{"name":"bravo","waypoints":["a","b","c"]}}],
            "areas":[{{"name":"park","polygon":[[0,-20],[60,-20],[60,20],[0,20]]}}],
            "objects":[{{"id":"p1","class":"injured_person","x":40,"y":2}}]{extra}}}"#
    );
    Arc::new(load_map(&doc).unwrap())
}

fn drone() -> RobotSpec {
    RobotSpec::new("snapdragon", "Snapdragon", RobotKind::Aerial)
}

fn husky() -> RobotSpec {
    RobotSpec::new("husky", "Husky", RobotKind::Ground)
}

#[test]
fn ground_goto_arrives_and_completes() {
    let mut sim = SimState::new(line_map(""), ScenarioConfig::new(vec![husky()])).unwrap();
    let msg = TbsMessage::new("m1", 0.0, "husky", ActionKind::Goto).with_location(LocationRef::waypoint("c"));
    sim.assign(msg).unwrap();
    let events = run_until_idle(&mut sim, 300.0);
    assert_eq!(outcome(&events), Some(Outcome::Succeeded));
    let r = sim.robot("husky").unwrap();
    assert!(r.position.distance(Point2::new(100.0, 0.0)) <= 0.5);
    assert!((r.odometer - 100.0).abs() < 1e-6);
    // 100 m at 1 m/s
    assert!((sim.clock() - 100.0).abs() < 1.0, "{}", sim.clock());
}

#[test]
fn statuses_follow_lifecycle() {
    let mut sim = SimState::new(line_map(""), ScenarioConfig::new(vec![husky()])).unwrap();
    let msg = TbsMessage::new("m1", 0.0, "husky", ActionKind::Goto).with_location(LocationRef::waypoint("b"));
    let mut events = sim.assign(msg).unwrap();
    events.extend(run_until_idle(&mut sim, 300.0));
    let phases: Vec<_> = events.iter().filter_map(|e| e.status()).map(|s| s.phase).collect();
    assert_eq!(phases.first(), Some(&StatusPhase::Accepted));
    assert_eq!(phases.get(1), Some(&StatusPhase::Started));
    assert_eq!(phases.last(), Some(&StatusPhase::Completed));
}

#[test]
fn scout_perches_when_site_is_near() {
    let map = line_map(r#","landing_sites":[[40,12]]"#);
    let mut sim = SimState::new(map, ScenarioConfig::new(vec![drone()])).unwrap();
    let msg = TbsMessage::new("m1", 0.0, "snapdragon", ActionKind::Scout).with_location(LocationRef::route("bravo"));
    sim.assign(msg).unwrap();
    let events = run_until_idle(&mut sim, 600.0);
    assert_eq!(outcome(&events), Some(Outcome::Succeeded));
    assert!(events.iter().any(|e| matches!(e.kind, EventKind::Perched { .. })));
    assert!(events
        .iter()
        .filter_map(|e| e.status())
        .any(|s| s.detail.contains("p1") && s.detections.iter().any(|d| d.object_id == "p1")));
}

#[test]
fn scout_hovers_without_site() {
    let mut sim = SimState::new(line_map(""), ScenarioConfig::new(vec![drone()])).unwrap();
    let msg = TbsMessage::new("m1", 0.0, "snapdragon", ActionKind::Scout).with_location(LocationRef::route("bravo"));
    sim.assign(msg).unwrap();
    let mut visited = Vec::new();
    let mut events = Vec::new();
    while !sim.all_idle() && sim.clock() < 600.0 {
        if let Some(t) = sim.robot("snapdragon").unwrap().active_task() {
            visited = t.machine.visited().to_vec();
        }
        events.extend(sim.step(0.1));
    }
    assert_eq!(outcome(&events), Some(Outcome::Succeeded));
    assert!(visited.iter().any(|s| s == "hover_observe"), "{visited:?}");
    assert!(!events.iter().any(|e| matches!(e.kind, EventKind::Perched { .. })));
    assert!(events.iter().filter_map(|e| e.status()).any(|s| s.detail.contains("p1")));
}

#[test]
fn aerial_search_discovers_person() {
    let mut sim = SimState::new(line_map(""), ScenarioConfig::new(vec![drone()])).unwrap();
    let msg = TbsMessage::new("m1", 0.0, "snapdragon", ActionKind::Search).with_location(LocationRef::area("park"));
    sim.assign(msg).unwrap();
    let events = run_until_idle(&mut sim, 600.0);
    assert_eq!(outcome(&events), Some(Outcome::Succeeded));
    assert_eq!(sim.snapshot().discovered, vec!["p1"]);
}

#[test]
fn preemption_interrupts_old_task() {
    let mut sim = SimState::new(line_map(""), ScenarioConfig::new(vec![husky()])).unwrap();
    let go = |id: &str, wp: &str| TbsMessage::new(id, 0.0, "husky", ActionKind::Goto).with_location(LocationRef::waypoint(wp));
    sim.assign(go("m1", "c")).unwrap();
    for _ in 0..50 {
        sim.step(0.1);
    }
    let events = sim.assign(go("m2", "a")).unwrap();
    assert_eq!(outcome(&events), Some(Outcome::Interrupted));
    let events = run_until_idle(&mut sim, 300.0);
    assert_eq!(outcome(&events), Some(Outcome::Succeeded));
}

#[test]
fn follower_keeps_distance() {
    let leader = husky().at(Point2::new(10.0, 0.0));
    let follower = RobotSpec::new("rover", "Rover", RobotKind::Ground).with_speeds(2.0, 4.0);
    let mut sim = SimState::new(line_map(""), ScenarioConfig::new(vec![leader, follower])).unwrap();
    sim.assign(TbsMessage::new("m1", 0.0, "husky", ActionKind::Goto).with_location(LocationRef::waypoint("c")))
        .unwrap();
    sim.assign(TbsMessage::new("m2", 0.0, "rover", ActionKind::Follow).with_leader("husky"))
        .unwrap();
    for _ in 0..300 {
        sim.step(0.1);
    }
    let mut good = 0;
    for _ in 0..600 {
        sim.step(0.1);
        let d = sim.robot("husky").unwrap().position.distance(sim.robot("rover").unwrap().position);
        if (d - 5.0).abs() <= 1.0 {
            good += 1;
        }
    }
    assert!(good >= 540, "{good}");
}

#[test]
fn urgent_is_faster() {
    let time = |u: Urgency| {
        let mut sim = SimState::new(line_map(""), ScenarioConfig::new(vec![husky()])).unwrap();
        let msg = TbsMessage::new("m1", 0.0, "husky", ActionKind::Goto)
            .with_location(LocationRef::waypoint("c"))
            .with_urgency(u);
        sim.assign(msg).unwrap();
        run_until_idle(&mut sim, 300.0);
        sim.clock()
    };
    let ratio = time(Urgency::Urgent) / time(Urgency::Normal);
    assert!((ratio - 0.5).abs() < 0.05, "{ratio}");
}

#[test]
fn land_without_site_warns() {
    let mut sim = SimState::new(line_map(""), ScenarioConfig::new(vec![drone()])).unwrap();
    sim.assign(TbsMessage::new("m1", 0.0, "snapdragon", ActionKind::Takeoff)).unwrap();
    run_until_idle(&mut sim, 60.0);
    assert!(sim.robot("snapdragon").unwrap().airborne);
    sim.assign(TbsMessage::new("m2", 0.0, "snapdragon", ActionKind::Land)).unwrap();
    let events = run_until_idle(&mut sim, 120.0);
    assert_eq!(outcome(&events), Some(Outcome::Succeeded));
    assert!(events.iter().filter_map(|e| e.status()).any(|s| s.detail.contains("no landing site")));
    assert!(!sim.robot("snapdragon").unwrap().airborne);
}

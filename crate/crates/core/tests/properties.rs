mod support;

use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use multibot_core::demo;
use multibot_core::dialogue::{interpret, normalize, AddressingMode, DialogueContext, DialogueTurn, Disposition};
use multibot_core::sim::{ScenarioConfig, SimState};
use multibot_core::tbs::{decode, encode, ActionKind, Modifiers, TbsMessage, Urgency};
use multibot_core::world::{load_map, plan_path, LocationRef, ObjectClass, Point2, Point3, TravelMode, WorldMap};

use support::{graph_doc, oracle_distance, random_command, random_graph, random_map, roster};

fn arb_location() -> impl Strategy<Value = Option<LocationRef>> {
    let name = "[a-zA-Z0-9 _\\-\"\\\\é]{1,12}";
    prop_oneof![
        Just(None),
        name.prop_map(|n| Some(LocationRef::waypoint(n))),
        name.prop_map(|n| Some(LocationRef::route(n))),
        name.prop_map(|n| Some(LocationRef::area(n))),
        name.prop_map(|n| Some(LocationRef::building(n))),
        (-1e12f64..1e12, proptest::num::f64::NORMAL).prop_map(|(x, y)| Some(LocationRef::Coordinates { x, y })),
    ]
}

fn arb_message() -> impl Strategy<Value = TbsMessage> {
    (
        "[a-z0-9\\-]{1,16}",
        proptest::num::f64::NORMAL | proptest::num::f64::ZERO,
        "[a-z]{1,10}",
        proptest::sample::select(ActionKind::ALL.to_vec()),
        arb_location(),
        proptest::option::of("[a-z]{1,8}"),
        proptest::option::of(prop_oneof![Just(ObjectClass::InjuredPerson), Just(ObjectClass::Other)]),
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(|(id, t, robot, action, loc, leader, obj, urgent, stealth)| TbsMessage {
            location: loc,
            leader_id: leader,
            object_info: obj,
            modifiers: Modifiers {
                urgency: if urgent { Urgency::Urgent } else { Urgency::Normal },
                stealth,
            },
            ..TbsMessage::new(id, t, robot, action)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn codec_round_trip(msg in arb_message()) {
        let line = encode(&msg);
        prop_assert!(!line.contains('\n'));
        let back = decode(&line).unwrap();
        prop_assert_eq!(&back, &msg);
        prop_assert_eq!(encode(&back), line);
    }

    #[test]
    fn ground_plans_are_shortest(seed in any::<u64>(), n in 2usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, n, 100.0);
        let map = WorldMap::from_document(serde_json::from_value(graph_doc(&g)).unwrap()).unwrap();
        let (s, t) = (seed as usize % n, (seed / 7) as usize % n);
        let path = plan_path(g.points[s], g.points[t], TravelMode::Ground, &map, 1.0).unwrap();
        let oracle = oracle_distance(&g, s, t);
        prop_assert!((path.length() - oracle).abs() <= 1e-9 * oracle.max(1.0));
        prop_assert_eq!(path.end(), g.points[t]);
    }

    #[test]
    fn line_of_sight_is_symmetric(
        x0 in -20.0f64..60.0, y0 in -20.0f64..60.0, z0 in 0.0f64..30.0,
        x1 in -20.0f64..60.0, y1 in -20.0f64..60.0, z1 in 0.0f64..30.0,
    ) {
        let map = load_map(
            r#"{"name":"b","buildings":[{"name":"h","polygon":[[10,10],[30,10],[30,25],[10,25]],"height":12}]}"#,
        ).unwrap();
        let (p, q) = (Point3::new(x0, y0, z0), Point3::new(x1, y1, z1));
        prop_assert_eq!(map.line_of_sight(p, q), map.line_of_sight(q, p));
    }

    #[test]
    fn statuses_respect_phase_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map = Arc::new(random_map(&mut rng));
        let robots = roster(&map);
        let mut sim = SimState::new(Arc::clone(&map), ScenarioConfig::new(robots.clone())).unwrap();
        let msg = random_command(&mut rng, &map, &robots[(seed % 2) as usize], "m1", 0.0);
        let mut events = sim.assign(msg).unwrap_or_default();
        for _ in 0..400 {
            events.extend(sim.step(0.25));
        }
        let mut last = None;
        for s in events.iter().filter_map(|e| e.status()) {
            prop_assert!(s.phase.may_follow(last), "{:?} after {:?}", s.phase, last);
            last = Some(s.phase);
        }
    }

    #[test]
    fn simulation_is_deterministic(seed in any::<u64>()) {
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let map = Arc::new(random_map(&mut rng));
            let mut robots = roster(&map);
            for r in &mut robots {
                r.miss_probability = 0.5;
            }
            let mut config = ScenarioConfig::new(robots.clone());
            config.seed = seed;
            let mut sim = SimState::new(Arc::clone(&map), config).unwrap();
            let msg = random_command(&mut rng, &map, &robots[1], "m1", 0.0);
            let _ = sim.assign(msg);
            for _ in 0..300 {
                sim.step(0.25);
            }
            serde_json::to_string(sim.event_log()).unwrap()
        };
        prop_assert_eq!(run(), run());
    }
}

fn vocabulary() -> Vec<String> {
    let mut words: Vec<String> = demo::corpus()
        .pairs()
        .iter()
        .flat_map(|p| normalize(&p.utterance))
        .collect();
    words.extend(["weather", "pizza", "joke", "please", "now"].map(String::from));
    words.sort();
    words.dedup();
    words
}

fn utterance() -> impl Strategy<Value = String> {
    proptest::collection::vec(proptest::sample::select(vocabulary()), 1..7).prop_map(|w| w.join(" "))
}

fn interpret_fresh(text: &str, threshold: f64) -> (Disposition, usize, bool) {
    let roster = demo::config().robots;
    let mut ctx = DialogueContext::new(&roster, AddressingMode::Implicit, threshold);
    let out = interpret(&DialogueTurn::operator(text, 1.0), &mut ctx, &demo::corpus(), &demo::map(), &roster);
    (out.disposition, out.tbs.len(), ctx.pending.is_some())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn raising_threshold_never_executes_off_topic(text in utterance(), lo in 0.05f64..0.6, bump in 0.0f64..0.4) {
        let (low, _, _) = interpret_fresh(&text, lo);
        let (high, _, _) = interpret_fresh(&text, lo + bump);
        if low == Disposition::OffTopic {
            prop_assert_ne!(high, Disposition::Executed);
        }
    }

    #[test]
    fn executed_iff_commands_and_no_dangling_frame(text in utterance()) {
        let (d, n, pending) = interpret_fresh(&text, 0.35);
        prop_assert_eq!(d == Disposition::Executed, n > 0);
        prop_assert!(!(pending && n > 0));
    }

    #[test]
    fn ranking_is_stable_under_tf_scaling(text in utterance(), k in 2usize..5) {
        let corpus = demo::corpus();
        let tokens = normalize(&text);
        let scaled: Vec<String> = tokens.iter().flat_map(|t| std::iter::repeat(t.clone()).take(k)).collect();
        prop_assert_eq!(&corpus.best(&tokens).0.id, &corpus.best(&scaled).0.id);
    }
}

#[test]
fn air_paths_are_straight() {
    let map = load_map(r#"{"name":"empty"}"#).unwrap();
    let (a, b) = (Point2::new(0.0, 0.0), Point2::new(30.0, 40.0));
    let path = plan_path(a, b, TravelMode::Air, &map, 1.0).unwrap();
    assert_eq!(path.length(), 50.0);
}

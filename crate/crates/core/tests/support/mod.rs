//! Random maps and commands shared by the property and acceptance suites.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use multibot_core::sim::{RobotKind, RobotSpec};
use multibot_core::tbs::{ActionKind, TbsMessage, Urgency};
use multibot_core::world::{LocationRef, ObjectClass, Point2, WorldMap};

pub struct RandomGraph {
    pub points: Vec<Point2>,
    pub edges: Vec<(usize, usize)>,
}

/// A connected graph: a random spanning tree plus a few chords.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, extent: f64) -> RandomGraph {
    let mut points: Vec<Point2> = Vec::with_capacity(n);
    while points.len() < n {
        let p = Point2::new(rng.gen_range(0.0..extent), rng.gen_range(0.0..extent));
        // Keep waypoints apart so snapping is unambiguous.
        if points.iter().all(|q| q.distance(p) > 2.0) {
            points.push(p);
        }
    }
    let mut edges = Vec::new();
    for i in 1..n {
        edges.push((rng.gen_range(0..i), i));
    }
    for _ in 0..rng.gen_range(0..=n) {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b && !edges.contains(&(a, b)) && !edges.contains(&(b, a)) {
            edges.push((a, b));
        }
    }
    RandomGraph { points, edges }
}

pub fn wp(i: usize) -> String {
    format!("w{i}")
}

pub fn graph_doc(g: &RandomGraph) -> Value {
    json!({
        "name": "random",
        "waypoints": g.points.iter().enumerate().map(|(i, p)| json!({"name": wp(i), "x": p.x, "y": p.y})).collect::<Vec<_>>(),
        "edges": g.edges.iter().map(|&(a, b)| json!({"from": wp(a), "to": wp(b)})).collect::<Vec<_>>(),
    })
}

/// A random map with areas, routes, objects and landing sites.
pub fn random_map(rng: &mut ChaCha8Rng) -> WorldMap {
    let n = rng.gen_range(3..=12);
    let extent = 150.0;
    let g = random_graph(rng, n, extent);
    let mut doc = graph_doc(&g);
    let areas: Vec<Value> = (0..rng.gen_range(1..=2))
        .map(|i| {
            let (x, y) = (rng.gen_range(0.0..extent - 30.0), rng.gen_range(0.0..extent - 30.0));
            let (w, h) = (rng.gen_range(10.0..40.0), rng.gen_range(10.0..40.0));
            json!({"name": format!("area{i}"), "polygon": [[x, y], [x + w, y], [x + w, y + h], [x, y + h]]})
        })
        .collect();
    let routes: Vec<Value> = (0..rng.gen_range(1..=2))
        .map(|i| {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            let len = rng.gen_range(2..=n.min(5));
            json!({"name": format!("route{i}"), "waypoints": order[..len].iter().map(|&k| wp(k)).collect::<Vec<_>>()})
        })
        .collect();
    let objects: Vec<Value> = (0..rng.gen_range(0..=3))
        .map(|i| {
            let class = if rng.gen_bool(0.7) { "injured_person" } else { "other" };
            json!({"id": format!("obj-{i}"), "class": class, "x": rng.gen_range(0.0..extent), "y": rng.gen_range(0.0..extent)})
        })
        .collect();
    let sites: Vec<Value> = (0..rng.gen_range(0..=2))
        .map(|_| json!([rng.gen_range(0.0..extent), rng.gen_range(0.0..extent)]))
        .collect();
    doc["areas"] = areas.into();
    doc["routes"] = routes.into();
    doc["objects"] = objects.into();
    doc["landing_sites"] = sites.into();
    WorldMap::from_document(serde_json::from_value(doc).unwrap()).unwrap()
}

pub fn roster(map: &WorldMap) -> Vec<RobotSpec> {
    let start = map.waypoints()[0].position;
    vec![
        RobotSpec::new("husky", "Husky", RobotKind::Ground).at(start),
        RobotSpec::new("snapdragon", "Snapdragon", RobotKind::Aerial).at(start),
    ]
}

/// A command the robot is capable of, with a location that exists on the map.
pub fn random_command(rng: &mut ChaCha8Rng, map: &WorldMap, robot: &RobotSpec, id: &str, t: f64) -> TbsMessage {
    let actions: Vec<ActionKind> = robot.capabilities.iter().copied().collect();
    let action = *actions.choose(rng).unwrap();
    let mut msg = TbsMessage::new(id, t, robot.id.clone(), action);
    match action {
        ActionKind::Goto => {
            msg.location = Some(if rng.gen_bool(0.7) {
                LocationRef::waypoint(map.waypoints().choose(rng).unwrap().name.clone())
            } else {
                let w = map.waypoints().choose(rng).unwrap().position;
                LocationRef::point(Point2::new(w.x + rng.gen_range(-3.0..3.0), w.y + rng.gen_range(-3.0..3.0)))
            })
        }
        ActionKind::Scout => msg.location = Some(LocationRef::route(map.routes().choose(rng).unwrap().name.clone())),
        ActionKind::Search | ActionKind::Patrol => {
            msg.location = Some(LocationRef::area(map.areas().choose(rng).unwrap().name.clone()))
        }
        ActionKind::Follow => {
            msg.leader_id = Some(if robot.id == "husky" { "snapdragon" } else { "husky" }.into());
        }
        _ => {}
    }
    if rng.gen_bool(0.3) {
        msg.modifiers.urgency = Urgency::Urgent;
    }
    if rng.gen_bool(0.2) {
        msg.object_info = Some(ObjectClass::Other);
    }
    msg
}

/// Independent O(n²) Dijkstra over a graph's Euclidean edge weights.
pub fn oracle_distance(g: &RandomGraph, s: usize, t: usize) -> f64 {
    let n = g.points.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[s] = 0.0;
    for _ in 0..n {
        let Some(u) = (0..n).filter(|&i| !done[i]).min_by(|&a, &b| dist[a].total_cmp(&dist[b])) else { break };
        done[u] = true;
        for &(a, b) in &g.edges {
            let v = if a == u { b } else if b == u { a } else { continue };
            let w = g.points[a].distance(g.points[b]);
            if dist[u] + w < dist[v] {
                dist[v] = dist[u] + w;
            }
        }
    }
    dist[t]
}

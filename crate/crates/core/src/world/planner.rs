use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::{Point2, WorldError, WorldMap};

pub const DEFAULT_SNAP_DISTANCE: f64 = 5.0;

/// Polyline in the ground plane. The length is cached at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    points: Vec<Point2>,
    length: f64,
}

impl Path {
    /// Builds a path, dropping consecutive duplicate points.
    ///
    /// # Panics
    /// If `points` is empty.
    pub fn new(points: Vec<Point2>) -> Self {
        assert!(!points.is_empty(), "a path needs at least one point");
        let mut clean: Vec<Point2> = Vec::with_capacity(points.len());
        for p in points {
            if clean.last().is_none_or(|q: &Point2| q.distance(p) > 1e-9) {
                clean.push(p);
            }
        }
        let length = clean.windows(2).map(|w| w[0].distance(w[1])).sum();
        Self {
            points: clean,
            length,
        }
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn start(&self) -> Point2 {
        self.points[0]
    }

    pub fn end(&self) -> Point2 {
        *self.points.last().expect("non-empty")
    }

    /// Appends `other`, merging the shared joint.
    pub fn join(&self, other: &Path) -> Path {
        let mut pts = self.points.clone();
        pts.extend_from_slice(&other.points);
        Path::new(pts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TravelMode {
    Ground,
    Air,
}

#[derive(PartialEq)]
struct Entry {
    cost: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(map: &WorldMap, source: usize, target: usize) -> Option<Vec<usize>> {
    let adjacency = map.adjacency();
    let n = adjacency.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry {
        cost: 0.0,
        node: source,
    });
    while let Some(Entry { cost, node }) = heap.pop() {
        if node == target {
            break;
        }
        if cost > dist[node] {
            continue;
        }
        for &(next, w) in &adjacency[node] {
            let c = cost + w;
            if c < dist[next] {
                dist[next] = c;
                prev[next] = node;
                heap.push(Entry { cost: c, node: next });
            }
        }
    }
    if !dist[target].is_finite() {
        return None;
    }
    let mut nodes = vec![target];
    let mut cur = target;
    while cur != source {
        cur = prev[cur];
        nodes.push(cur);
    }
    nodes.reverse();
    Some(nodes)
}

fn snap(map: &WorldMap, p: Point2, snap_distance: f64) -> Result<usize, WorldError> {
    match map.nearest_waypoint(p) {
        Some((i, d)) if d <= snap_distance => Ok(i),
        _ => Err(WorldError::OffNetwork {
            x: p.x,
            y: p.y,
            snap: snap_distance,
        }),
    }
}

/// Plans a path from `from` to `to`.
///
/// Ground travel snaps both ends to their nearest waypoints (within
/// `snap_distance`) and follows the shortest road-graph route between them.
/// Air travel is a single straight segment.
pub fn plan_path(
    from: Point2,
    to: Point2,
    mode: TravelMode,
    map: &WorldMap,
    snap_distance: f64,
) -> Result<Path, WorldError> {
    if !from.is_finite() || !to.is_finite() {
        return Err(WorldError::OffNetwork {
            x: from.x,
            y: from.y,
            snap: snap_distance,
        });
    }
    match mode {
        TravelMode::Air => Ok(Path::new(vec![from, to])),
        TravelMode::Ground => {
            let s = snap(map, from, snap_distance)?;
            let t = snap(map, to, snap_distance)?;
            let nodes = dijkstra(map, s, t).ok_or_else(|| WorldError::NoPath {
                from: map.waypoints()[s].name.clone(),
                to: map.waypoints()[t].name.clone(),
            })?;
            let mut points = Vec::with_capacity(nodes.len() + 2);
            points.push(from);
            points.extend(nodes.iter().map(|&i| map.waypoints()[i].position));
            points.push(to);
            Ok(Path::new(points))
        }
    }
}

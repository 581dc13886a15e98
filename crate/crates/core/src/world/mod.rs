//! The simulated outdoor environment: named places, the road graph, buildings
//! and the objects the robots are looking for.
//!
//! A [`WorldMap`] is loaded once from a JSON document and is immutable
//! afterwards. All name lookups are case-insensitive.

mod geometry;
mod planner;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use geometry::{closest_on_segment, segments_intersect, Point2, Point3, Polygon};
pub use planner::{plan_path, Path, TravelMode, DEFAULT_SNAP_DISTANCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("map syntax error: {0}")]
    Syntax(String),
    #[error("invalid map entity {entity}: {reason}")]
    Validation { entity: String, reason: String },
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
    #[error("no road path from {from} to {to}")]
    NoPath { from: String, to: String },
    #[error("point ({x:.2}, {y:.2}) is farther than {snap} m from the road network")]
    OffNetwork { x: f64, y: f64, snap: f64 },
}

impl WorldError {
    fn invalid(entity: impl Into<String>, reason: impl Into<String>) -> Self {
        WorldError::Validation {
            entity: entity.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Waypoint {
    pub name: String,
    pub position: Point2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadEdge {
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Building {
    pub name: String,
    pub footprint: Polygon,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedPolygon {
    pub name: String,
    pub polygon: Polygon,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub name: String,
    pub waypoints: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectClass {
    InjuredPerson,
    Other,
}

impl ObjectClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ObjectClass::InjuredPerson => "injured_person",
            ObjectClass::Other => "other",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            ObjectClass::InjuredPerson => "injured person",
            ObjectClass::Other => "object",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectOfInterest {
    pub id: String,
    pub class: ObjectClass,
    pub position: Point2,
    pub discovered: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EntityKind {
    Waypoint,
    Route,
    Area,
    Building,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Waypoint => "waypoint",
            EntityKind::Route => "route",
            EntityKind::Area => "area",
            EntityKind::Building => "building",
        }
    }
}

/// A place a command can refer to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LocationRef {
    Waypoint { name: String },
    Route { name: String },
    Area { name: String },
    Building { name: String },
    Coordinates { x: f64, y: f64 },
}

impl LocationRef {
    pub fn waypoint(name: impl Into<String>) -> Self {
        LocationRef::Waypoint { name: name.into() }
    }
    pub fn route(name: impl Into<String>) -> Self {
        LocationRef::Route { name: name.into() }
    }
    pub fn area(name: impl Into<String>) -> Self {
        LocationRef::Area { name: name.into() }
    }
    pub fn building(name: impl Into<String>) -> Self {
        LocationRef::Building { name: name.into() }
    }
    pub fn point(p: Point2) -> Self {
        LocationRef::Coordinates { x: p.x, y: p.y }
    }

    pub fn kind_str(&self) -> &'static str {
        match self {
            LocationRef::Waypoint { .. } => "waypoint",
            LocationRef::Route { .. } => "route",
            LocationRef::Area { .. } => "area",
            LocationRef::Building { .. } => "building",
            LocationRef::Coordinates { .. } => "coordinates",
        }
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            LocationRef::Waypoint { name }
            | LocationRef::Route { name }
            | LocationRef::Area { name }
            | LocationRef::Building { name } => Some(name),
            LocationRef::Coordinates { .. } => None,
        }
    }

    /// Human-readable label for replies.
    pub fn label(&self) -> String {
        match self {
            LocationRef::Coordinates { x, y } => format!("({x:.1}, {y:.1})"),
            LocationRef::Route { name } => format!("route {name}"),
            other => other.name().unwrap_or_default().to_string(),
        }
    }
}

// On-disk document. Unknown keys are rejected everywhere.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDocument {
    pub name: String,
    #[serde(default)]
    pub waypoints: Vec<WaypointDoc>,
    #[serde(default)]
    pub edges: Vec<EdgeDoc>,
    #[serde(default)]
    pub buildings: Vec<BuildingDoc>,
    #[serde(default)]
    pub areas: Vec<AreaDoc>,
    #[serde(default)]
    pub routes: Vec<RouteDoc>,
    #[serde(default)]
    pub landing_sites: Vec<[f64; 2]>,
    #[serde(default)]
    pub objects: Vec<ObjectDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaypointDoc {
    pub name: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildingDoc {
    pub name: String,
    pub polygon: Vec<[f64; 2]>,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaDoc {
    pub name: String,
    pub polygon: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteDoc {
    pub name: String,
    pub waypoints: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectDoc {
    pub id: String,
    pub class: ObjectClass,
    pub x: f64,
    pub y: f64,
}

fn polygon_from(points: &[[f64; 2]]) -> Polygon {
    Polygon::new(points.iter().map(|p| Point2::new(p[0], p[1])).collect())
}

/// Immutable, validated environment.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldMap {
    name: String,
    waypoints: Vec<Waypoint>,
    edges: Vec<RoadEdge>,
    buildings: Vec<Building>,
    areas: Vec<NamedPolygon>,
    routes: Vec<Route>,
    landing_sites: Vec<Point2>,
    objects: Vec<ObjectOfInterest>,
    index: BTreeMap<String, (EntityKind, usize)>,
    adjacency: Vec<Vec<(usize, f64)>>,
    document: MapDocument,
}

/// Parses and validates a map document.
pub fn load_map(document: &str) -> Result<WorldMap, WorldError> {
    let doc: MapDocument =
        serde_json::from_str(document).map_err(|e| WorldError::Syntax(e.to_string()))?;
    WorldMap::from_document(doc)
}

fn key(name: &str) -> String {
    name.trim().to_lowercase()
}

impl WorldMap {
    pub fn from_document(doc: MapDocument) -> Result<WorldMap, WorldError> {
        let mut index: BTreeMap<String, (EntityKind, usize)> = BTreeMap::new();
        let mut register = |name: &str, kind: EntityKind, i: usize| -> Result<(), WorldError> {
            let k = key(name);
            if k.is_empty() {
                return Err(WorldError::invalid(
                    format!("{} #{i}", kind.as_str()),
                    "empty name",
                ));
            }
            if let Some((prev, _)) = index.insert(k, (kind, i)) {
                return Err(WorldError::invalid(
                    format!("{} {name}", kind.as_str()),
                    format!("duplicate name (already used by a {})", prev.as_str()),
                ));
            }
            Ok(())
        };

        let mut waypoints = Vec::with_capacity(doc.waypoints.len());
        for (i, w) in doc.waypoints.iter().enumerate() {
            register(&w.name, EntityKind::Waypoint, i)?;
            let position = Point2::new(w.x, w.y);
            if !position.is_finite() {
                return Err(WorldError::invalid(
                    format!("waypoint {}", w.name),
                    "non-finite coordinates",
                ));
            }
            waypoints.push(Waypoint {
                name: w.name.clone(),
                position,
            });
        }
        let mut routes = Vec::with_capacity(doc.routes.len());
        for (i, r) in doc.routes.iter().enumerate() {
            register(&r.name, EntityKind::Route, i)?;
            routes.push(Route {
                name: r.name.clone(),
                waypoints: r.waypoints.clone(),
            });
        }
        let mut areas = Vec::with_capacity(doc.areas.len());
        for (i, a) in doc.areas.iter().enumerate() {
            register(&a.name, EntityKind::Area, i)?;
            let polygon = polygon_from(&a.polygon);
            if !polygon.is_simple() {
                return Err(WorldError::invalid(
                    format!("area {}", a.name),
                    "polygon must be simple with at least 3 vertices",
                ));
            }
            areas.push(NamedPolygon {
                name: a.name.clone(),
                polygon,
            });
        }
        let mut buildings = Vec::with_capacity(doc.buildings.len());
        for (i, b) in doc.buildings.iter().enumerate() {
            register(&b.name, EntityKind::Building, i)?;
            let footprint = polygon_from(&b.polygon);
            if !footprint.is_simple() {
                return Err(WorldError::invalid(
                    format!("building {}", b.name),
                    "footprint must be simple with at least 3 vertices",
                ));
            }
            if !(b.height.is_finite() && b.height > 0.0) {
                return Err(WorldError::invalid(
                    format!("building {}", b.name),
                    "height must be positive",
                ));
            }
            buildings.push(Building {
                name: b.name.clone(),
                footprint,
                height: b.height,
            });
        }

        let waypoint_index = |name: &str| match index.get(&key(name)) {
            Some((EntityKind::Waypoint, i)) => Some(*i),
            _ => None,
        };

        let mut adjacency = vec![Vec::new(); waypoints.len()];
        let mut edges = Vec::with_capacity(doc.edges.len());
        for e in &doc.edges {
            let a = waypoint_index(&e.from)
                .ok_or_else(|| WorldError::invalid(format!("edge endpoint {}", e.from), "undeclared waypoint"))?;
            let b = waypoint_index(&e.to)
                .ok_or_else(|| WorldError::invalid(format!("edge endpoint {}", e.to), "undeclared waypoint"))?;
            if a == b {
                return Err(WorldError::invalid(
                    format!("edge {}-{}", e.from, e.to),
                    "edge endpoints must differ",
                ));
            }
            let w = waypoints[a].position.distance(waypoints[b].position);
            if !adjacency[a].iter().any(|&(n, _)| n == b) {
                adjacency[a].push((b, w));
                adjacency[b].push((a, w));
            }
            edges.push(RoadEdge {
                from: waypoints[a].name.clone(),
                to: waypoints[b].name.clone(),
            });
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(n, _)| n);
        }

        for r in &mut routes {
            if r.waypoints.len() < 2 {
                return Err(WorldError::invalid(
                    format!("route {}", r.name),
                    "needs at least two waypoints",
                ));
            }
            let mut canonical = Vec::with_capacity(r.waypoints.len());
            for w in &r.waypoints {
                let i = waypoint_index(w).ok_or_else(|| {
                    WorldError::invalid(format!("route {} waypoint {w}", r.name), "undeclared waypoint")
                })?;
                canonical.push(waypoints[i].name.clone());
            }
            if canonical.windows(2).any(|p| p[0] == p[1]) {
                return Err(WorldError::invalid(
                    format!("route {}", r.name),
                    "consecutive waypoints must differ",
                ));
            }
            r.waypoints = canonical;
        }

        let mut landing_sites = Vec::with_capacity(doc.landing_sites.len());
        for (i, s) in doc.landing_sites.iter().enumerate() {
            let p = Point2::new(s[0], s[1]);
            if !p.is_finite() {
                return Err(WorldError::invalid(
                    format!("landing site #{i}"),
                    "non-finite coordinates",
                ));
            }
            landing_sites.push(p);
        }

        let mut objects: Vec<ObjectOfInterest> = Vec::with_capacity(doc.objects.len());
        for o in &doc.objects {
            let position = Point2::new(o.x, o.y);
            if o.id.trim().is_empty() || !position.is_finite() {
                return Err(WorldError::invalid(
                    format!("object {}", o.id),
                    "needs an id and finite coordinates",
                ));
            }
            if objects.iter().any(|p| key(&p.id) == key(&o.id)) {
                return Err(WorldError::invalid(format!("object {}", o.id), "duplicate id"));
            }
            objects.push(ObjectOfInterest {
                id: o.id.clone(),
                class: o.class,
                position,
                discovered: false,
            });
        }

        Ok(WorldMap {
            name: doc.name.clone(),
            waypoints,
            edges,
            buildings,
            areas,
            routes,
            landing_sites,
            objects,
            index,
            adjacency,
            document: doc,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }
    pub fn edges(&self) -> &[RoadEdge] {
        &self.edges
    }
    pub fn buildings(&self) -> &[Building] {
        &self.buildings
    }
    pub fn areas(&self) -> &[NamedPolygon] {
        &self.areas
    }
    pub fn routes(&self) -> &[Route] {
        &self.routes
    }
    pub fn landing_sites(&self) -> &[Point2] {
        &self.landing_sites
    }
    pub fn objects(&self) -> &[ObjectOfInterest] {
        &self.objects
    }

    /// The document this map was built from, for self-describing logs.
    pub fn document(&self) -> &MapDocument {
        &self.document
    }

    pub(crate) fn adjacency(&self) -> &[Vec<(usize, f64)>] {
        &self.adjacency
    }

    fn lookup(&self, name: &str, kind: EntityKind) -> Option<usize> {
        match self.index.get(&key(name)) {
            Some((k, i)) if *k == kind => Some(*i),
            _ => None,
        }
    }

    pub fn waypoint(&self, name: &str) -> Option<&Waypoint> {
        self.lookup(name, EntityKind::Waypoint).map(|i| &self.waypoints[i])
    }
    pub fn waypoint_index(&self, name: &str) -> Option<usize> {
        self.lookup(name, EntityKind::Waypoint)
    }
    pub fn route(&self, name: &str) -> Option<&Route> {
        self.lookup(name, EntityKind::Route).map(|i| &self.routes[i])
    }
    pub fn area(&self, name: &str) -> Option<&NamedPolygon> {
        self.lookup(name, EntityKind::Area).map(|i| &self.areas[i])
    }
    pub fn building(&self, name: &str) -> Option<&Building> {
        self.lookup(name, EntityKind::Building).map(|i| &self.buildings[i])
    }
    pub fn object(&self, id: &str) -> Option<&ObjectOfInterest> {
        self.objects.iter().find(|o| key(&o.id) == key(id))
    }

    /// All declared entity names (canonical spelling) with their kind.
    pub fn entity_names(&self) -> Vec<(EntityKind, &str)> {
        self.index
            .values()
            .map(|&(kind, i)| {
                let name = match kind {
                    EntityKind::Waypoint => self.waypoints[i].name.as_str(),
                    EntityKind::Route => self.routes[i].name.as_str(),
                    EntityKind::Area => self.areas[i].name.as_str(),
                    EntityKind::Building => self.buildings[i].name.as_str(),
                };
                (kind, name)
            })
            .collect()
    }

    /// Case-insensitive entity lookup.
    pub fn resolve_location(&self, name: &str) -> Result<LocationRef, WorldError> {
        match self.index.get(&key(name)) {
            Some((EntityKind::Waypoint, i)) => Ok(LocationRef::waypoint(&self.waypoints[*i].name)),
            Some((EntityKind::Route, i)) => Ok(LocationRef::route(&self.routes[*i].name)),
            Some((EntityKind::Area, i)) => Ok(LocationRef::area(&self.areas[*i].name)),
            Some((EntityKind::Building, i)) => Ok(LocationRef::building(&self.buildings[*i].name)),
            None => Err(WorldError::UnknownLocation(name.to_string())),
        }
    }

    /// Whether a reference names something that exists in this map.
    pub fn contains_ref(&self, loc: &LocationRef) -> bool {
        match loc {
            LocationRef::Waypoint { name } => self.waypoint(name).is_some(),
            LocationRef::Route { name } => self.route(name).is_some(),
            LocationRef::Area { name } => self.area(name).is_some(),
            LocationRef::Building { name } => self.building(name).is_some(),
            LocationRef::Coordinates { x, y } => Point2::new(*x, *y).is_finite(),
        }
    }

    /// The representative point of a location: waypoint position, first
    /// waypoint of a route, polygon centroid, or the coordinates themselves.
    pub fn location_point(&self, loc: &LocationRef) -> Result<Point2, WorldError> {
        let unknown = || WorldError::UnknownLocation(loc.label());
        match loc {
            LocationRef::Waypoint { name } => self.waypoint(name).map(|w| w.position).ok_or_else(unknown),
            LocationRef::Route { name } => {
                let r = self.route(name).ok_or_else(unknown)?;
                self.waypoint(&r.waypoints[0]).map(|w| w.position).ok_or_else(unknown)
            }
            LocationRef::Area { name } => self.area(name).map(|a| a.polygon.centroid()).ok_or_else(unknown),
            LocationRef::Building { name } => {
                self.building(name).map(|b| b.footprint.centroid()).ok_or_else(unknown)
            }
            LocationRef::Coordinates { x, y } => Ok(Point2::new(*x, *y)),
        }
    }

    pub fn route_points(&self, name: &str) -> Option<Vec<Point2>> {
        let r = self.route(name)?;
        r.waypoints
            .iter()
            .map(|w| self.waypoint(w).map(|w| w.position))
            .collect()
    }

    /// Nearest waypoint index; ties go to the earlier declaration.
    pub fn nearest_waypoint(&self, p: Point2) -> Option<(usize, f64)> {
        self.waypoints
            .iter()
            .enumerate()
            .map(|(i, w)| (i, w.position.distance(p)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
    }

    /// True iff the segment `p`→`q` stays outside every building volume.
    pub fn line_of_sight(&self, p: Point3, q: Point3) -> bool {
        line_of_sight(p, q, self)
    }
}

/// True iff the 3D segment from `p` to `q` does not pass through any
/// building footprint extruded to its height.
pub fn line_of_sight(p: Point3, q: Point3, map: &WorldMap) -> bool {
    let (a, b) = (p.ground(), q.ground());
    map.buildings.iter().all(|bld| {
        bld.footprint.inside_intervals(a, b).into_iter().all(|(t0, t1)| {
            // Altitude is linear in t, so its minimum over the interval sits at an end.
            let z0 = p.z + (q.z - p.z) * t0;
            let z1 = p.z + (q.z - p.z) * t1;
            z0.min(z1) >= bld.height
        })
    })
}

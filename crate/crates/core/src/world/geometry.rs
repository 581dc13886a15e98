//! Planar geometry helpers shared by the map, the planner and the sensors.

use serde::{Deserialize, Serialize};

const EPS: f64 = 1e-12;

/// A point in the ground plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, other: Point2, t: f64) -> Point2 {
        Point2::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }

    pub fn heading_to(self, other: Point2) -> f64 {
        (other.y - self.y).atan2(other.x - self.x)
    }
}

/// A point with altitude above the (flat) ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn ground(self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn on_segment(p: Point2, a: Point2, b: Point2) -> bool {
    p.x >= a.x.min(b.x) - EPS
        && p.x <= a.x.max(b.x) + EPS
        && p.y >= a.y.min(b.y) - EPS
        && p.y <= a.y.max(b.y) + EPS
}

/// Closed-segment intersection test, collinear overlaps included.
pub fn segments_intersect(a1: Point2, a2: Point2, b1: Point2, b2: Point2) -> bool {
    let d1 = cross(b1, b2, a1);
    let d2 = cross(b1, b2, a2);
    let d3 = cross(a1, a2, b1);
    let d4 = cross(a1, a2, b2);
    if ((d1 > EPS && d2 < -EPS) || (d1 < -EPS && d2 > EPS))
        && ((d3 > EPS && d4 < -EPS) || (d3 < -EPS && d4 > EPS))
    {
        return true;
    }
    (d1.abs() <= EPS && on_segment(a1, b1, b2))
        || (d2.abs() <= EPS && on_segment(a2, b1, b2))
        || (d3.abs() <= EPS && on_segment(b1, a1, a2))
        || (d4.abs() <= EPS && on_segment(b2, a1, a2))
}

/// Distance from `p` to the closed segment `a`–`b`, with the closest point.
pub fn closest_on_segment(p: Point2, a: Point2, b: Point2) -> (f64, Point2) {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let len2 = dx * dx + dy * dy;
    if len2 <= EPS {
        return (p.distance(a), a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    let c = a.lerp(b, t);
    (p.distance(c), c)
}

/// Simple polygon given by its vertices (implicitly closed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polygon {
    pub vertices: Vec<Point2>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point2>) -> Self {
        Self { vertices }
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> f64 {
        self.edges().map(|(a, b)| a.x * b.y - b.x * a.y).sum::<f64>() / 2.0
    }

    /// Area centroid; falls back to the vertex mean for degenerate input.
    pub fn centroid(&self) -> Point2 {
        let area = self.signed_area();
        if area.abs() <= EPS {
            let n = self.vertices.len().max(1) as f64;
            let (sx, sy) = self
                .vertices
                .iter()
                .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
            return Point2::new(sx / n, sy / n);
        }
        let (cx, cy) = self.edges().fold((0.0, 0.0), |(cx, cy), (a, b)| {
            let f = a.x * b.y - b.x * a.y;
            (cx + (a.x + b.x) * f, cy + (a.y + b.y) * f)
        });
        Point2::new(cx / (6.0 * area), cy / (6.0 * area))
    }

    pub fn bounding_box(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    /// Even-odd containment test. Boundary points may go either way.
    pub fn contains(&self, p: Point2) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// At least three vertices, non-zero area, no two non-adjacent edges touching.
    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        if n < 3 || !self.vertices.iter().all(|p| p.is_finite()) {
            return false;
        }
        if self.signed_area().abs() <= EPS {
            return false;
        }
        let edges: Vec<_> = self.edges().collect();
        for i in 0..n {
            if edges[i].0.distance(edges[i].1) <= EPS {
                return false;
            }
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    // Adjacent edges may only share their common vertex.
                    let (a, b) = edges[i];
                    let (c, d) = edges[j];
                    let shared = if j == i + 1 { b } else { a };
                    let other_i = if j == i + 1 { a } else { b };
                    let other_j = if j == i + 1 { d } else { c };
                    if cross(shared, other_i, other_j).abs() <= EPS
                        && ((other_i.x - shared.x) * (other_j.x - shared.x)
                            + (other_i.y - shared.y) * (other_j.y - shared.y))
                            > 0.0
                    {
                        return false;
                    }
                    continue;
                }
                if segments_intersect(edges[i].0, edges[i].1, edges[j].0, edges[j].1) {
                    return false;
                }
            }
        }
        true
    }

    /// Parameter intervals `[t0, t1]` along `a`→`b` whose points lie inside the polygon.
    pub fn inside_intervals(&self, a: Point2, b: Point2) -> Vec<(f64, f64)> {
        let dx = b.x - a.x;
        let dy = b.y - a.y;
        if dx.abs() <= EPS && dy.abs() <= EPS {
            return if self.contains(a) {
                vec![(0.0, 1.0)]
            } else {
                Vec::new()
            };
        }
        let mut ts = vec![0.0, 1.0];
        for (c, d) in self.edges() {
            let ex = d.x - c.x;
            let ey = d.y - c.y;
            let denom = dx * ey - dy * ex;
            if denom.abs() <= EPS {
                continue;
            }
            let t = ((c.x - a.x) * ey - (c.y - a.y) * ex) / denom;
            let u = ((c.x - a.x) * dy - (c.y - a.y) * dx) / denom;
            if (-EPS..=1.0 + EPS).contains(&u) && t > 0.0 && t < 1.0 {
                ts.push(t);
            }
        }
        ts.sort_by(f64::total_cmp);
        ts.dedup_by(|x, y| (*x - *y).abs() <= EPS);
        let mut out: Vec<(f64, f64)> = Vec::new();
        for w in ts.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            if t1 - t0 <= EPS {
                continue;
            }
            if self.contains(a.lerp(b, (t0 + t1) / 2.0)) {
                match out.last_mut() {
                    Some(last) if (last.1 - t0).abs() <= EPS => last.1 = t1,
                    _ => out.push((t0, t1)),
                }
            }
        }
        out
    }

    /// Sorted x-intervals where the horizontal line at `y` crosses the interior.
    pub fn horizontal_chords(&self, y: f64) -> Vec<(f64, f64)> {
        let mut xs: Vec<f64> = self
            .edges()
            .filter(|(a, b)| (a.y > y) != (b.y > y))
            .map(|(a, b)| a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x))
            .collect();
        xs.sort_by(f64::total_cmp);
        xs.chunks_exact(2).map(|c| (c[0], c[1])).collect()
    }
}

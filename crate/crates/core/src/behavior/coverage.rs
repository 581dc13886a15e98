//! Area coverage and perimeter paths.

use crate::world::{plan_path, Path, Point2, Polygon, TravelMode, WorldMap};

/// Back-and-forth lane sweep over `poly`.
///
/// Lanes run along x, evenly spaced over the bounding box at no more than
/// `spacing` apart and clipped to the polygon; alternate lanes reverse so the
/// sweep snakes. Every point of the box lies within `spacing / 2` (in y) of
/// a lane.
pub fn boustrophedon(poly: &Polygon, spacing: f64) -> Vec<Point2> {
    let (lo, hi) = poly.bounding_box();
    let height = hi.y - lo.y;
    if !(spacing > 0.0) || !height.is_finite() {
        return Vec::new();
    }
    let lanes = ((height / spacing).ceil() as usize).max(1);
    let pitch = height / lanes as f64;
    let mut points = Vec::new();
    for k in 0..lanes {
        let y = lo.y + (k as f64 + 0.5) * pitch;
        let mut chords = poly.horizontal_chords(y);
        if k % 2 == 1 {
            chords.reverse();
            for (a, b) in chords {
                points.push(Point2::new(b, y));
                points.push(Point2::new(a, y));
            }
        } else {
            for (a, b) in chords {
                points.push(Point2::new(a, y));
                points.push(Point2::new(b, y));
            }
        }
    }
    points
}

/// Closed loop around the polygon boundary, starting at the vertex nearest `from`.
pub fn perimeter_loop(poly: &Polygon, from: Point2) -> Vec<Point2> {
    let n = poly.vertices.len();
    let start = (0..n)
        .min_by(|&a, &b| {
            poly.vertices[a]
                .distance(from)
                .total_cmp(&poly.vertices[b].distance(from))
        })
        .unwrap_or(0);
    (0..=n).map(|k| poly.vertices[(start + k) % n]).collect()
}

fn inside_waypoints(map: &WorldMap, poly: &Polygon) -> Vec<Point2> {
    map.waypoints()
        .iter()
        .map(|w| w.position)
        .filter(|p| poly.contains(*p))
        .collect()
}

pub(crate) fn chain(map: &WorldMap, from: Point2, stops: &[Point2], snap: f64) -> Result<Path, String> {
    let mut path = Path::new(vec![from]);
    let mut cur = from;
    for &stop in stops {
        let leg = plan_path(cur, stop, TravelMode::Ground, map, snap).map_err(|e| e.to_string())?;
        path = path.join(&leg);
        cur = stop;
    }
    Ok(path)
}

/// Road-bound sweep: visits every waypoint inside the area, nearest first.
pub fn ground_tour(map: &WorldMap, poly: &Polygon, from: Point2, snap: f64) -> Result<Path, String> {
    let mut left = inside_waypoints(map, poly);
    if left.is_empty() {
        return Err("no roads inside the area".into());
    }
    let mut order = Vec::with_capacity(left.len());
    let mut cur = from;
    while !left.is_empty() {
        let (i, _) = left
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.distance(cur).total_cmp(&b.1.distance(cur)))
            .expect("non-empty");
        cur = left.remove(i);
        order.push(cur);
    }
    chain(map, from, &order, snap)
}

/// Road-bound patrol lap through the area's waypoints in angular order.
pub fn ground_loop(map: &WorldMap, poly: &Polygon, from: Point2, snap: f64) -> Result<Path, String> {
    let mut stops = inside_waypoints(map, poly);
    if stops.is_empty() {
        return Err("no roads inside the area".into());
    }
    let n = stops.len() as f64;
    let cx = stops.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = stops.iter().map(|p| p.y).sum::<f64>() / n;
    let centre = Point2::new(cx, cy);
    stops.sort_by(|a, b| centre.heading_to(*a).total_cmp(&centre.heading_to(*b)));
    let start = (0..stops.len())
        .min_by(|&a, &b| stops[a].distance(from).total_cmp(&stops[b].distance(from)))
        .unwrap_or(0);
    stops.rotate_left(start);
    stops.push(stops[0]);
    chain(map, from, &stops, snap)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(w: f64, h: f64) -> Polygon {
        Polygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(w, 0.0),
            Point2::new(w, h),
            Point2::new(0.0, h),
        ])
    }

    #[test]
    fn lanes_snake_and_respect_spacing() {
        let pts = boustrophedon(&rect(40.0, 30.0), 10.0);
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0], Point2::new(0.0, 5.0));
        assert_eq!(pts[1], Point2::new(40.0, 5.0));
        assert_eq!(pts[2], Point2::new(40.0, 15.0));
        assert_eq!(pts[3], Point2::new(0.0, 15.0));
        // Any y in [0, 30] is within 5 of a lane.
        for i in 0..=300 {
            let y = i as f64 * 0.1;
            let best = pts.iter().map(|p| (p.y - y).abs()).fold(f64::INFINITY, f64::min);
            assert!(best <= 5.0 + 1e-9);
        }
    }

    #[test]
    fn perimeter_closes() {
        let pts = perimeter_loop(&rect(10.0, 10.0), Point2::new(11.0, 11.0));
        assert_eq!(pts.len(), 5);
        assert_eq!(pts[0], Point2::new(10.0, 10.0));
        assert_eq!(pts[0], pts[4]);
    }
}

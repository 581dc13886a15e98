use rand::Rng;

use crate::sim::{sense, EventKind, RobotKind, RobotState, SimEvent};
use crate::tbs::StatusPhase;
use crate::world::{plan_path, Path, Point2, TravelMode};

use super::coverage::{boustrophedon, chain, ground_loop, ground_tour, perimeter_loop};
use super::{NodeResult, StateMachine, Step, TickContext};

fn straight(from: Point2, points: &[Point2]) -> Path {
    let mut all = Vec::with_capacity(points.len() + 1);
    all.push(from);
    all.extend_from_slice(points);
    Path::new(all)
}

impl StateMachine {
    fn fail(&mut self, why: impl Into<String>) -> Option<NodeResult> {
        self.board.failure = Some(why.into());
        Some(NodeResult::Failed)
    }

    fn set_path(&mut self, planned: Result<Path, String>) -> Option<NodeResult> {
        match planned {
            Ok(path) => {
                self.board.path = Some(path);
                Some(NodeResult::Done)
            }
            Err(e) => self.fail(e),
        }
    }

    /// Starts the planned path on first entry; afterwards reports whether the
    /// robot has stopped at its end.
    fn follow_path(&mut self, first: bool, robot: &mut RobotState, ctx: &TickContext<'_>) -> Option<NodeResult> {
        if first {
            let Some(path) = self.board.path.clone() else {
                return self.fail("no path planned");
            };
            if let Err(e) = robot.set_motion(&path, self.urgency) {
                return self.fail(e.to_string());
            }
            return None;
        }
        if robot.is_moving() {
            return None;
        }
        let end = self.board.path.as_ref().map(Path::end).unwrap_or(robot.position);
        if robot.position.distance(end) <= ctx.params.arrival_tolerance {
            Some(NodeResult::Done)
        } else {
            self.fail("stopped short of the goal")
        }
    }

    fn progress(&mut self, robot: &RobotState, ctx: &mut TickContext<'_>, detail: String) {
        self.emit(robot, ctx.clock, ctx.events, StatusPhase::Progress, detail);
    }

    /// Detects newly visible objects; returns a target-class detection if one
    /// was among them.
    fn detect(&mut self, robot: &RobotState, ctx: &mut TickContext<'_>, react: bool) -> bool {
        let seen = sense(robot, ctx.objects, ctx.map, ctx.clock);
        let miss = robot.spec.miss_probability;
        let mut fresh = Vec::new();
        let mut hit = false;
        for d in seen {
            if self.board.seen.contains(&d.object_id) {
                continue;
            }
            if miss > 0.0 && ctx.rng.gen::<f64>() < miss {
                continue;
            }
            self.board.seen.insert(d.object_id.clone());
            if let Some(o) = ctx.objects.iter_mut().find(|o| o.id == d.object_id) {
                o.discovered = true;
            }
            ctx.events.push(SimEvent::new(ctx.clock, robot, EventKind::Detected { detection: d.clone() }));
            self.tracker.push_detection(d.clone());
            if react && !hit && d.class == self.target_class {
                self.board.target = Some(d.clone());
                hit = true;
            }
            fresh.push(d.object_id);
        }
        if !hit && !fresh.is_empty() {
            self.progress(robot, ctx, format!("detected {}", fresh.join(", ")));
        }
        hit
    }

    pub(super) fn run_step(
        &mut self,
        step: &Step,
        first: bool,
        robot: &mut RobotState,
        ctx: &mut TickContext<'_>,
    ) -> Option<NodeResult> {
        let aerial = robot.kind() == RobotKind::Aerial;
        let pos = robot.position;
        let snap = ctx.params.snap_distance;
        match step {
            Step::EnsureAirborne => {
                if !aerial {
                    return Some(NodeResult::Done);
                }
                if robot.is_climbing() {
                    return None;
                }
                if robot.airborne && robot.altitude >= robot.spec.cruise_altitude - 1e-9 {
                    return Some(NodeResult::Done);
                }
                robot.start_takeoff();
                None
            }
            Step::PlanTo { goal } => {
                let planned = if aerial {
                    Ok(straight(pos, &[*goal]))
                } else {
                    plan_path(pos, *goal, TravelMode::Ground, ctx.map, snap).map_err(|e| e.to_string())
                };
                self.set_path(planned)
            }
            Step::PlanRoute { route } => {
                let Some(points) = ctx.map.route_points(route) else {
                    return self.fail(format!("unknown route {route}"));
                };
                let planned = if aerial {
                    Ok(straight(pos, &points))
                } else {
                    chain(ctx.map, pos, &points, snap)
                };
                self.set_path(planned)
            }
            Step::PlanCoverage { area } => {
                let Some(poly) = ctx.map.area(area).map(|a| a.polygon.clone()) else {
                    return self.fail(format!("unknown area {area}"));
                };
                let planned = if aerial {
                    let spacing = ctx.params.lane_spacing_factor * robot.spec.working_reach();
                    let lanes = boustrophedon(&poly, spacing);
                    if lanes.is_empty() {
                        Err("area too small to cover".to_string())
                    } else {
                        Ok(straight(pos, &lanes))
                    }
                } else {
                    ground_tour(ctx.map, &poly, pos, snap)
                };
                self.set_path(planned)
            }
            Step::PlanLoop { area } => {
                let Some(poly) = ctx.map.area(area).map(|a| a.polygon.clone()) else {
                    return self.fail(format!("unknown area {area}"));
                };
                let planned = if aerial {
                    Ok(straight(pos, &perimeter_loop(&poly, pos)))
                } else {
                    ground_loop(ctx.map, &poly, pos, snap)
                };
                self.set_path(planned)
            }
            Step::Traverse => self.follow_path(first, robot, ctx),
            Step::Sweep { react } => {
                if first {
                    if let Some(r) = self.follow_path(true, robot, ctx) {
                        return Some(r);
                    }
                }
                if self.detect(robot, ctx, *react) {
                    self.board.resume = robot.motion().map(|m| m.remaining().to_vec()).unwrap_or_default();
                    robot.cancel_motion();
                    return Some(NodeResult::Detected);
                }
                if first {
                    return None;
                }
                self.follow_path(false, robot, ctx)
            }
            Step::CheckSite => {
                let Some(target) = self.board.target.as_ref().map(|d| d.position) else {
                    return Some(NodeResult::NoSite);
                };
                let radius = ctx.params.perch_radius;
                let site = ctx
                    .map
                    .landing_sites()
                    .iter()
                    .copied()
                    .filter(|s| s.distance(target) <= radius)
                    .min_by(|a, b| a.distance(target).total_cmp(&b.distance(target)));
                self.board.site = site;
                Some(if site.is_some() { NodeResult::SiteNearby } else { NodeResult::NoSite })
            }
            Step::PlanToSite => match self.board.site {
                Some(site) => self.set_path(Ok(straight(pos, &[site]))),
                None => self.fail("no landing site"),
            },
            Step::Land { perch } => {
                if first {
                    robot.start_landing();
                }
                if robot.airborne || robot.is_climbing() {
                    return None;
                }
                if *perch {
                    ctx.events.push(SimEvent::new(ctx.clock, robot, EventKind::Perched { site: pos }));
                }
                Some(NodeResult::Done)
            }
            Step::LandNearest => match self.board.stage {
                0 => {
                    if !robot.airborne && !robot.is_climbing() {
                        return Some(NodeResult::Done);
                    }
                    let radius = ctx.params.landing_radius;
                    let site = ctx
                        .map
                        .landing_sites()
                        .iter()
                        .copied()
                        .filter(|s| s.distance(pos) <= radius)
                        .min_by(|a, b| a.distance(pos).total_cmp(&b.distance(pos)));
                    match site {
                        Some(site) if robot.airborne && robot.set_motion(&straight(pos, &[site]), self.urgency).is_ok() => {
                            self.board.stage = 1;
                        }
                        _ => {
                            self.progress(robot, ctx, "no landing site nearby; landing in place".into());
                            robot.start_landing();
                            self.board.stage = 2;
                        }
                    }
                    None
                }
                1 => {
                    if !robot.is_moving() {
                        robot.start_landing();
                        self.board.stage = 2;
                    }
                    None
                }
                _ => {
                    if robot.airborne || robot.is_climbing() {
                        None
                    } else {
                        Some(NodeResult::Done)
                    }
                }
            },
            Step::Observe => {
                if first {
                    self.board.until = Some(ctx.clock + ctx.params.observe_duration);
                }
                match self.board.until {
                    Some(until) if ctx.clock + 1e-9 < until => None,
                    _ => Some(NodeResult::Done),
                }
            }
            Step::HoverObserve => match self.board.stage {
                0 => {
                    let Some(target) = self.board.target.as_ref().map(|d| d.position) else {
                        return self.fail("nothing to observe");
                    };
                    let away = pos.distance(target);
                    let standoff = ctx.params.hover_standoff;
                    let spot = if away > 1e-9 {
                        target.lerp(pos, standoff / away)
                    } else {
                        Point2::new(target.x + standoff, target.y)
                    };
                    if let Err(e) = robot.set_motion(&straight(pos, &[spot]), self.urgency) {
                        return self.fail(e.to_string());
                    }
                    self.board.stage = 1;
                    None
                }
                1 => {
                    if !robot.is_moving() {
                        self.board.until = Some(ctx.clock + ctx.params.observe_duration);
                        self.board.stage = 2;
                    }
                    None
                }
                _ => match self.board.until {
                    Some(until) if ctx.clock + 1e-9 < until => None,
                    _ => Some(NodeResult::Done),
                },
            },
            Step::Report => {
                let detail = match &self.board.target {
                    Some(d) => format!(
                        "found {} {} at ({:.1}, {:.1})",
                        d.class.describe(),
                        d.object_id,
                        d.position.x,
                        d.position.y
                    ),
                    None => "nothing to report".into(),
                };
                self.progress(robot, ctx, detail);
                Some(NodeResult::Done)
            }
            Step::Resume => {
                let rest = std::mem::take(&mut self.board.resume);
                self.board.target = None;
                self.board.site = None;
                self.set_path(Ok(straight(pos, &rest)))
            }
            Step::AcquireLeader { leader } => {
                if ctx.robots.iter().any(|r| &r.id == leader) {
                    Some(NodeResult::Done)
                } else {
                    self.fail(format!("leader {leader} not found"))
                }
            }
            Step::Track { leader } => {
                let Some(lead) = ctx.robots.iter().find(|r| &r.id == leader) else {
                    return self.fail(format!("lost leader {leader}"));
                };
                let d = ctx.params.follow_distance;
                let slot = Point2::new(
                    lead.position.x - d * lead.heading.cos(),
                    lead.position.y - d * lead.heading.sin(),
                );
                if pos.distance(slot) <= ctx.params.arrival_tolerance {
                    robot.cancel_motion();
                } else if let Err(e) = robot.set_motion(&straight(pos, &[slot]), self.urgency) {
                    return self.fail(e.to_string());
                }
                None
            }
            Step::Halt => {
                robot.cancel_motion();
                Some(NodeResult::Done)
            }
        }
    }
}

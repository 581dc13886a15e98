//! Template-generated training corpus over a map's entity names.

use std::collections::BTreeSet;

use crate::sim::{RobotKind, RobotSpec};
use crate::tbs::ActionKind;
use crate::world::WorldMap;

use super::{normalize, Category, RobotBinding, Slot, TbsTemplate, TrainingPair};

const WAKE: [&str; 16] = [
    "{R}",
    "hey {R}",
    "{R}, respond",
    "{R}, listen up",
    "ok {R}",
    "attention {R}",
    "{R}, come in",
    "hello {R}",
    "{R}, wake up",
    "yo {R}",
    "{R}, over",
    "{R}, radio check",
    "{R}, stand by for orders",
    "excuse me {R}",
    "{R}, status check",
    "{R}, report in",
];

const GOTO: [&str; 4] = ["go to the {x}", "head to {x}", "move to the {x}", "hurry to the {x}"];
const GOTO_OPEN: [&str; 3] = ["go to", "head to", "move to"];

const FOLLOW: [&str; 15] = [
    "follow {L}",
    "follow behind {L}",
    "stay behind {L}",
    "tail {L}",
    "trail {L}",
    "go after {L}",
    "keep up with {L}",
    "shadow {L}",
    "stick with {L}",
    "escort {L}",
    "fall in behind {L}",
    "stay close to {L}",
    "come along with {L}",
    "track {L}",
    "follow {L} closely",
];
const FOLLOW_NAMED: [&str; 3] = ["{R}, follow {L}", "{R}, tail {L}", "{R}, stay behind {L}"];

const SCOUT: [&str; 3] = ["check route {x}", "inspect route {x}", "survey route {x}"];
const SCOUT_AERIAL: [&str; 4] = [
    "scout route {x}",
    "scout along route {x}",
    "fly route {x}",
    "fly along route {x} and look for people",
];
const SEARCH: [&str; 7] = [
    "search the {x}",
    "search the {x} for injured people",
    "sweep the {x}",
    "inspect the {x}",
    "look around the {x}",
    "comb the {x}",
    "check the {x} for survivors",
];

const PATROL: [&str; 9] = [
    "patrol the {x}",
    "patrol around the {x}",
    "guard the {x}",
    "keep watch over the {x}",
    "circle the {x}",
    "walk the perimeter of the {x}",
    "monitor the {x}",
    "keep an eye on the {x}",
    "make rounds in the {x}",
];

struct Builder {
    pairs: Vec<TrainingPair>,
    seen: BTreeSet<Vec<String>>,
}

impl Builder {
    fn add(
        &mut self,
        utterance: String,
        category: Category,
        binding: RobotBinding,
        response: &str,
        template: Option<TbsTemplate>,
        required: &[Slot],
    ) {
        // Pairs with the same bag of words would tie on every query.
        let key: BTreeSet<String> = normalize(&utterance).into_iter().collect();
        if !self.seen.insert(key.into_iter().collect()) {
            return;
        }
        self.pairs.push(TrainingPair {
            id: format!("p{:04}", self.pairs.len() + 1),
            utterance,
            category,
            robot_binding: binding,
            response_template: response.to_string(),
            tbs_template: template,
            required_slots: required.iter().copied().collect(),
        });
    }
}

fn fill(pattern: &str, key: &str, value: &str) -> String {
    pattern.replace(key, value)
}

fn with_loc(action: ActionKind, slot: Slot) -> Option<TbsTemplate> {
    let mut t = TbsTemplate::new(action);
    t.loc = Some(slot.hole());
    Some(t)
}

/// Builds the synthetic instruction corpus for a map and roster.
///
/// Five categories (wake, navigate, follow, inspect, patrol), each phrased
/// with and without a robot name. Phrasings only one kind of robot can carry
/// out ("fly", "scout", "take off", "drive") are bound to that robot for
/// implicit addressing.
pub fn generate_corpus(map: &WorldMap, roster: &[RobotSpec]) -> Vec<TrainingPair> {
    use Category::*;
    use RobotBinding::*;
    let mut b = Builder {
        pairs: Vec::new(),
        seen: BTreeSet::new(),
    };
    let aerial = roster.iter().find(|r| r.kind == RobotKind::Aerial);
    let ground = roster.iter().find(|r| r.kind == RobotKind::Ground);
    let spoken = |n: &str| n.replace('_', " ");
    let waypoints: Vec<String> = map.waypoints().iter().map(|w| spoken(&w.name)).collect();
    let routes: Vec<String> = map.routes().iter().map(|r| spoken(&r.name)).collect();
    let areas: Vec<String> = map.areas().iter().map(|a| spoken(&a.name)).collect();

    for r in roster {
        for p in WAKE {
            b.add(fill(p, "{R}", &r.display_name), Wake, ExplicitName, "{robot} here. Go ahead.", None, &[]);
        }
    }

    let goto = "{robot} is heading to the {destination}.";
    let dest = || with_loc(ActionKind::Goto, Slot::Destination);
    for w in &waypoints {
        for p in GOTO {
            b.add(fill(p, "{x}", w), Navigate, AddresseeContext, goto, dest(), &[Slot::Destination]);
        }
        for r in roster {
            b.add(format!("{}, go to the {w}", r.display_name), Navigate, ExplicitName, goto, dest(), &[Slot::Destination]);
        }
        if let Some(g) = ground {
            b.add(format!("drive to the {w}"), Navigate, Implicit(g.id.clone()), goto, dest(), &[Slot::Destination]);
        }
        if let Some(a) = aerial {
            b.add(format!("fly to the {w}"), Navigate, Implicit(a.id.clone()), goto, dest(), &[Slot::Destination]);
        }
        b.add(format!("both of you go to the {w}"), Navigate, Broadcast, goto, dest(), &[Slot::Destination]);
        b.add(format!("everyone go to the {w}"), Navigate, Broadcast, goto, dest(), &[Slot::Destination]);
    }
    for p in GOTO_OPEN {
        b.add(p.to_string(), Navigate, AddresseeContext, goto, dest(), &[Slot::Destination]);
    }
    for r in roster {
        b.add(format!("{}, go to", r.display_name), Navigate, ExplicitName, goto, dest(), &[Slot::Destination]);
    }
    if let Some(g) = ground {
        b.add("drive to".into(), Navigate, Implicit(g.id.clone()), goto, dest(), &[Slot::Destination]);
    }
    if let Some(a) = aerial {
        let takeoff = Some(TbsTemplate::new(ActionKind::Takeoff));
        let land = Some(TbsTemplate::new(ActionKind::Land));
        b.add("fly to".into(), Navigate, Implicit(a.id.clone()), goto, dest(), &[Slot::Destination]);
        for p in ["take off", "launch", "get airborne", "lift off"] {
            b.add(p.into(), Navigate, Implicit(a.id.clone()), "{robot} is taking off.", takeoff.clone(), &[]);
        }
        b.add(format!("{}, take off", a.display_name), Navigate, ExplicitName, "{robot} is taking off.", takeoff, &[]);
        for p in ["land", "land now", "touch down", "set down"] {
            b.add(p.into(), Navigate, Implicit(a.id.clone()), "{robot} is landing.", land.clone(), &[]);
        }
        b.add(format!("{}, land", a.display_name), Navigate, ExplicitName, "{robot} is landing.", land, &[]);
    }
    let halt = Some(TbsTemplate::new(ActionKind::Halt));
    for p in ["stop", "halt", "hold position", "freeze"] {
        b.add(p.into(), Navigate, AddresseeContext, "{robot} is stopping.", halt.clone(), &[]);
    }
    for r in roster {
        b.add(format!("{}, stop", r.display_name), Navigate, ExplicitName, "{robot} is stopping.", halt.clone(), &[]);
    }

    let follow = "{robot} is following {leader}.";
    let lead = || {
        let mut t = TbsTemplate::new(ActionKind::Follow);
        t.leader = Some(Slot::Leader.hole());
        Some(t)
    };
    for l in roster {
        for p in FOLLOW {
            b.add(fill(p, "{L}", &l.display_name), Follow, AddresseeContext, follow, lead(), &[Slot::Leader]);
        }
        for f in roster.iter().filter(|f| f.id != l.id) {
            for p in FOLLOW_NAMED {
                let u = fill(&fill(p, "{R}", &f.display_name), "{L}", &l.display_name);
                b.add(u, Follow, ExplicitName, follow, lead(), &[Slot::Leader]);
            }
        }
    }
    for p in ["follow", "follow behind", "tail"] {
        b.add(p.into(), Follow, AddresseeContext, follow, lead(), &[Slot::Leader]);
    }

    let scout = "{robot} is scouting route {route}.";
    let route = || with_loc(ActionKind::Scout, Slot::Route);
    for x in &routes {
        for p in SCOUT {
            b.add(fill(p, "{x}", x), Inspect, AddresseeContext, scout, route(), &[Slot::Route]);
        }
        if let Some(a) = aerial {
            for p in SCOUT_AERIAL {
                b.add(fill(p, "{x}", x), Inspect, Implicit(a.id.clone()), scout, route(), &[Slot::Route]);
            }
        }
        if let Some(g) = ground {
            b.add(format!("drive route {x}"), Inspect, Implicit(g.id.clone()), scout, route(), &[Slot::Route]);
        }
        for r in roster {
            b.add(format!("{}, scout route {x}", r.display_name), Inspect, ExplicitName, scout, route(), &[Slot::Route]);
        }
    }
    let search = "{robot} is searching the {area}.";
    let area = |a: ActionKind| with_loc(a, Slot::Area);
    for x in &areas {
        for p in SEARCH {
            b.add(fill(p, "{x}", x), Inspect, AddresseeContext, search, area(ActionKind::Search), &[Slot::Area]);
        }
        if let Some(a) = aerial {
            b.add(format!("fly over the {x}"), Inspect, Implicit(a.id.clone()), search, area(ActionKind::Search), &[Slot::Area]);
        }
        for r in roster {
            b.add(format!("{}, search the {x}", r.display_name), Inspect, ExplicitName, search, area(ActionKind::Search), &[Slot::Area]);
        }
    }
    if let Some(a) = aerial {
        b.add("scout".into(), Inspect, Implicit(a.id.clone()), scout, route(), &[Slot::Route]);
    }
    b.add("search".into(), Inspect, AddresseeContext, search, area(ActionKind::Search), &[Slot::Area]);

    let patrol = "{robot} is patrolling the {area}.";
    for x in &areas {
        for p in PATROL {
            b.add(fill(p, "{x}", x), Patrol, AddresseeContext, patrol, area(ActionKind::Patrol), &[Slot::Area]);
        }
        for r in roster {
            b.add(format!("{}, patrol the {x}", r.display_name), Patrol, ExplicitName, patrol, area(ActionKind::Patrol), &[Slot::Area]);
        }
        b.add(format!("everyone patrol the {x}"), Patrol, Broadcast, patrol, area(ActionKind::Patrol), &[Slot::Area]);
    }
    b.add("patrol".into(), Patrol, AddresseeContext, patrol, area(ActionKind::Patrol), &[Slot::Area]);
    for r in roster {
        b.add(format!("{}, patrol", r.display_name), Patrol, ExplicitName, patrol, area(ActionKind::Patrol), &[Slot::Area]);
    }
    b.pairs
}

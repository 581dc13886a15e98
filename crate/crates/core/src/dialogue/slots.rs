use crate::sim::RobotSpec;
use crate::world::{EntityKind, WorldMap};

use super::normalize;

/// Entities and modifiers found in one utterance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilledSlots {
    /// Canonical waypoint name.
    pub destination: Option<String>,
    pub route: Option<String>,
    pub area: Option<String>,
    /// Robot ids in order of mention.
    pub robots: Vec<String>,
    pub urgent: bool,
}

impl FilledSlots {
    pub fn is_empty(&self) -> bool {
        self.destination.is_none() && self.route.is_none() && self.area.is_none() && self.robots.is_empty()
    }
}

pub const URGENCY_WORDS: [&str; 5] = ["quickly", "fast", "urgent", "hurry", "asap"];

#[derive(Debug, Clone, PartialEq)]
enum Entry {
    Waypoint(String),
    Route(String),
    Area(String),
    Robot(String),
}

fn gazetteer(map: &WorldMap, roster: &[RobotSpec]) -> Vec<(Vec<String>, Entry)> {
    let mut out = Vec::new();
    for (kind, name) in map.entity_names() {
        let entry = match kind {
            EntityKind::Waypoint => Entry::Waypoint(name.to_string()),
            EntityKind::Route => Entry::Route(name.to_string()),
            EntityKind::Area => Entry::Area(name.to_string()),
            _ => continue,
        };
        out.push((normalize(name), entry));
    }
    for r in roster {
        out.push((normalize(&r.display_name), Entry::Robot(r.id.clone())));
        out.push((normalize(&r.id), Entry::Robot(r.id.clone())));
    }
    out.retain(|(toks, _)| !toks.is_empty());
    out
}

/// Roster robots named in the tokens, in order of first mention.
pub fn robot_mentions(tokens: &[String], roster: &[RobotSpec]) -> Vec<String> {
    let names: Vec<(Vec<String>, &str)> = roster
        .iter()
        .flat_map(|r| [(normalize(&r.display_name), r.id.as_str()), (normalize(&r.id), r.id.as_str())])
        .filter(|(n, _)| !n.is_empty())
        .collect();
    let mut out: Vec<String> = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        match names.iter().filter(|(n, _)| tokens[i..].starts_with(n)).max_by_key(|(n, _)| n.len()) {
            Some((n, id)) => {
                if !out.iter().any(|o| o == id) {
                    out.push(id.to_string());
                }
                i += n.len();
            }
            None => i += 1,
        }
    }
    out
}

/// Gazetteer match of map entities and robot names; at each position the
/// longest entry wins and the first mention of each slot is kept.
pub fn extract_slots(tokens: &[String], map: &WorldMap, roster: &[RobotSpec]) -> FilledSlots {
    let entries = gazetteer(map, roster);
    let mut slots = FilledSlots {
        urgent: tokens.iter().any(|t| URGENCY_WORDS.contains(&t.as_str())),
        ..FilledSlots::default()
    };
    let mut i = 0;
    while i < tokens.len() {
        let best = entries
            .iter()
            .filter(|(words, _)| tokens[i..].starts_with(words))
            .max_by_key(|(words, _)| words.len());
        let Some((words, entry)) = best else {
            i += 1;
            continue;
        };
        match entry {
            Entry::Waypoint(n) => {
                slots.destination.get_or_insert_with(|| n.clone());
            }
            Entry::Route(n) => {
                slots.route.get_or_insert_with(|| n.clone());
            }
            Entry::Area(n) => {
                slots.area.get_or_insert_with(|| n.clone());
            }
            Entry::Robot(id) => {
                if !slots.robots.contains(id) {
                    slots.robots.push(id.clone());
                }
            }
        }
        i += words.len();
    }
    slots
}

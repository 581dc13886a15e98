//! Bundled demo town: map, two-robot scenario and instruction corpus.

use crate::dialogue::Corpus;
use crate::sim::ScenarioConfig;
use crate::world::{load_map, WorldMap};

pub const MAP_JSON: &str = include_str!("../assets/demo_map.json");
pub const CONFIG_JSON: &str = include_str!("../assets/demo_config.json");
pub const CORPUS_JSONL: &str = include_str!("../assets/demo_corpus.jsonl");

pub fn map() -> WorldMap {
    load_map(MAP_JSON).expect("demo map is valid")
}

pub fn config() -> ScenarioConfig {
    ScenarioConfig::from_json(CONFIG_JSON).expect("demo config is valid")
}

pub fn corpus() -> Corpus {
    Corpus::from_jsonl(CORPUS_JSONL).expect("demo corpus is valid")
}

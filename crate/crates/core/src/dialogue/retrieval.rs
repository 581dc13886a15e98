//! Training corpus and TF-IDF response retrieval.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::sim::RobotSpec;
use crate::tbs::{ActionKind, Urgency};

use super::DialogueError;

/// Lowercases, drops apostrophes, turns every other non-alphanumeric into a
/// separator and splits.
pub fn normalize(text: &str) -> Vec<String> {
    let mut cleaned = String::with_capacity(text.len());
    for c in text.chars() {
        if c == '\'' || c == '\u{2019}' {
            continue;
        }
        if c.is_alphanumeric() {
            cleaned.extend(c.to_lowercase());
        } else {
            cleaned.push(' ');
        }
    }
    cleaned.split_whitespace().map(str::to_string).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Wake,
    Navigate,
    Follow,
    Inspect,
    Patrol,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Wake,
        Category::Navigate,
        Category::Follow,
        Category::Inspect,
        Category::Patrol,
    ];
}

/// How a pair decides which robot it addresses.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum RobotBinding {
    /// The utterance names its robot.
    ExplicitName,
    /// Whoever holds the operator's attention.
    AddresseeContext,
    /// Bound to one robot by its capabilities (used in implicit mode).
    Implicit(String),
    Broadcast,
}

impl fmt::Display for RobotBinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RobotBinding::ExplicitName => f.write_str("explicit-name"),
            RobotBinding::AddresseeContext => f.write_str("addressee-context"),
            RobotBinding::Implicit(id) => write!(f, "implicit:{id}"),
            RobotBinding::Broadcast => f.write_str("broadcast"),
        }
    }
}

impl FromStr for RobotBinding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "explicit-name" => Ok(RobotBinding::ExplicitName),
            "addressee-context" => Ok(RobotBinding::AddresseeContext),
            "broadcast" => Ok(RobotBinding::Broadcast),
            _ => match s.strip_prefix("implicit:") {
                Some(id) if !id.is_empty() => Ok(RobotBinding::Implicit(id.to_string())),
                _ => Err(format!("unknown robot binding `{s}`")),
            },
        }
    }
}

impl TryFrom<String> for RobotBinding {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<RobotBinding> for String {
    fn from(b: RobotBinding) -> String {
        b.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Destination,
    Route,
    Area,
    Leader,
    Robot,
}

impl Slot {
    pub fn as_str(self) -> &'static str {
        match self {
            Slot::Destination => "destination",
            Slot::Route => "route",
            Slot::Area => "area",
            Slot::Leader => "leader",
            Slot::Robot => "robot",
        }
    }

    pub fn hole(self) -> String {
        format!("{{{}}}", self.as_str())
    }
}

/// Partial command; `loc` and `leader` hold slot holes such as `{route}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TbsTemplate {
    pub action: ActionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loc: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leader: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub urgency: Option<Urgency>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub stealth: bool,
}

impl TbsTemplate {
    pub fn new(action: ActionKind) -> Self {
        Self {
            action,
            loc: None,
            leader: None,
            urgency: None,
            stealth: false,
        }
    }

    /// The slot named by the location hole, if any.
    pub fn loc_slot(&self) -> Option<Slot> {
        let hole = self.loc.as_deref()?;
        [Slot::Destination, Slot::Route, Slot::Area]
            .into_iter()
            .find(|s| s.hole() == hole)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingPair {
    pub id: String,
    pub utterance: String,
    pub category: Category,
    pub robot_binding: RobotBinding,
    pub response_template: String,
    #[serde(default)]
    pub tbs_template: Option<TbsTemplate>,
    #[serde(default)]
    pub required_slots: BTreeSet<Slot>,
}

impl TrainingPair {
    fn check(&self) -> Result<(), String> {
        if normalize(&self.utterance).is_empty() {
            return Err("empty utterance".into());
        }
        if (self.category == Category::Wake) != self.tbs_template.is_none() {
            return Err("a TBS template is required for every category except wake".into());
        }
        if let Some(t) = &self.tbs_template {
            if t.loc.is_some() && t.loc_slot().is_none() {
                return Err(format!("unknown location hole {:?}", t.loc));
            }
            if let Some(l) = &t.leader {
                if *l != Slot::Leader.hole() {
                    return Err(format!("unknown leader hole {l}"));
                }
            }
            for slot in &self.required_slots {
                let used = t.loc_slot() == Some(*slot) || (*slot == Slot::Leader && t.leader.is_some());
                if !used && *slot != Slot::Robot {
                    return Err(format!("required slot {} is not used by the template", slot.as_str()));
                }
            }
        }
        Ok(())
    }
}

/// Ranked candidate from a [`Scorer`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored {
    /// Index into the corpus pairs.
    pub index: usize,
    pub score: f64,
}

/// Relevance model mapping an utterance to ranked corpus pairs.
pub trait Scorer {
    /// Every pair with its score in `[0, 1]`, best first, ties by lowest id.
    fn rank(&self, tokens: &[String]) -> Vec<Scored>;
}

/// TF-IDF cosine similarity with smoothed idf `ln((1 + N) / (1 + df)) + 1`.
#[derive(Debug, Clone)]
pub struct TfIdf {
    n_docs: usize,
    df: BTreeMap<String, usize>,
    docs: Vec<(BTreeMap<String, f64>, f64)>,
    /// Pair indices sorted by id, the tie-break order.
    id_order: Vec<usize>,
}

fn counts(tokens: &[String]) -> BTreeMap<&str, f64> {
    let mut tf = BTreeMap::new();
    for t in tokens {
        *tf.entry(t.as_str()).or_insert(0.0) += 1.0;
    }
    tf
}

impl TfIdf {
    pub fn new(pairs: &[TrainingPair]) -> Self {
        let tokenized: Vec<Vec<String>> = pairs.iter().map(|p| normalize(&p.utterance)).collect();
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for toks in &tokenized {
            for t in toks.iter().collect::<BTreeSet<_>>() {
                *df.entry(t.clone()).or_insert(0) += 1;
            }
        }
        let mut index = Self {
            n_docs: pairs.len(),
            df,
            docs: Vec::new(),
            id_order: Vec::new(),
        };
        index.docs = tokenized.iter().map(|t| index.vector(t)).collect();
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        order.sort_by(|&a, &b| pairs[a].id.cmp(&pairs[b].id));
        index.id_order = order;
        index
    }

    pub fn idf(&self, term: &str) -> f64 {
        let df = self.df.get(term).copied().unwrap_or(0) as f64;
        ((1.0 + self.n_docs as f64) / (1.0 + df)).ln() + 1.0
    }

    /// Whether the term occurs anywhere in the corpus.
    pub fn knows(&self, term: &str) -> bool {
        self.df.contains_key(term)
    }

    /// Weighted term vector and its Euclidean norm.
    pub fn vector(&self, tokens: &[String]) -> (BTreeMap<String, f64>, f64) {
        let v: BTreeMap<String, f64> = counts(tokens)
            .into_iter()
            .map(|(t, c)| (t.to_string(), c * self.idf(t)))
            .collect();
        let norm = v.values().map(|w| w * w).sum::<f64>().sqrt();
        (v, norm)
    }
}

impl Scorer for TfIdf {
    fn rank(&self, tokens: &[String]) -> Vec<Scored> {
        let (q, qn) = self.vector(tokens);
        let mut out: Vec<Scored> = self
            .id_order
            .iter()
            .map(|&index| {
                let (d, dn) = &self.docs[index];
                let score = if qn == 0.0 || *dn == 0.0 {
                    0.0
                } else {
                    // fold from +0.0: an empty float sum is -0.0
                    let dot = q.iter().filter_map(|(t, w)| d.get(t).map(|x| w * x)).fold(0.0, |a, b| a + b);
                    (dot / (qn * dn)).clamp(0.0, 1.0)
                };
                Scored { index, score }
            })
            .collect();
        // Stable sort keeps id order among equal scores.
        out.sort_by(|a, b| b.score.total_cmp(&a.score));
        out
    }
}

/// A validated set of training pairs with its retrieval index.
#[derive(Debug, Clone)]
pub struct Corpus {
    pairs: Vec<TrainingPair>,
    index: TfIdf,
}

impl Corpus {
    pub fn new(pairs: Vec<TrainingPair>) -> Result<Self, DialogueError> {
        if pairs.is_empty() {
            return Err(DialogueError::Corpus("corpus is empty".into()));
        }
        let mut ids = BTreeSet::new();
        for p in &pairs {
            if !ids.insert(p.id.as_str()) {
                return Err(DialogueError::Corpus(format!("duplicate pair id {}", p.id)));
            }
            p.check()
                .map_err(|e| DialogueError::Corpus(format!("pair {}: {e}", p.id)))?;
        }
        let index = TfIdf::new(&pairs);
        Ok(Self { pairs, index })
    }

    /// Parses a JSONL corpus, one pair per non-blank line.
    pub fn from_jsonl(text: &str) -> Result<Self, DialogueError> {
        let mut pairs = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let pair: TrainingPair = serde_json::from_str(line)
                .map_err(|e| DialogueError::Corpus(format!("line {}: {e}", n + 1)))?;
            pairs.push(pair);
        }
        Self::new(pairs)
    }

    pub fn to_jsonl(&self) -> String {
        to_jsonl(&self.pairs)
    }

    /// Checks that every implicit binding names a robot on the roster.
    pub fn check_roster(&self, roster: &[RobotSpec]) -> Result<(), DialogueError> {
        for p in &self.pairs {
            if let RobotBinding::Implicit(id) = &p.robot_binding {
                if !roster.iter().any(|r| &r.id == id) {
                    return Err(DialogueError::Corpus(format!(
                        "pair {} is bound to unknown robot {id}",
                        p.id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn pairs(&self) -> &[TrainingPair] {
        &self.pairs
    }

    pub fn pair(&self, id: &str) -> Option<&TrainingPair> {
        self.pairs.iter().find(|p| p.id == id)
    }

    pub fn scorer(&self) -> &TfIdf {
        &self.index
    }

    /// Every pair id with its score, best first.
    pub fn score(&self, tokens: &[String]) -> Vec<(String, f64)> {
        score(tokens, self)
    }

    pub fn best(&self, tokens: &[String]) -> (&TrainingPair, f64) {
        let top = self.index.rank(tokens)[0];
        (&self.pairs[top.index], top.score)
    }
}

pub fn to_jsonl(pairs: &[TrainingPair]) -> String {
    let mut out = String::new();
    for p in pairs {
        out.push_str(&serde_json::to_string(p).expect("pairs serialize"));
        out.push('\n');
    }
    out
}

/// Ranks the corpus against an utterance: `(pair id, score)`, best first.
pub fn score(tokens: &[String], corpus: &Corpus) -> Vec<(String, f64)> {
    corpus
        .index
        .rank(tokens)
        .into_iter()
        .map(|s| (corpus.pairs[s.index].id.clone(), s.score))
        .collect()
}

//! Pilot conversation and mission extraction.

mod llm;
mod resolve;
mod rules;

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::GeoPoint;

pub use llm::{llm_refine, LlmConfig, LlmOutcome, SYSTEM_PROMPT};
pub use resolve::{resolve_nodes, CandidateNode, RangeThresholds, ResolveError, ResolvedMission};
pub use rules::parse_conversation;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("instruction is empty")]
    InvalidInstruction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Pilot,
    System,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub speaker: Speaker,
    pub text: String,
}

/// Append-only dialogue history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conversation {
    turns: Vec<Turn>,
    created_at: DateTime<Utc>,
}

impl Default for Conversation {
    fn default() -> Self {
        Self::new()
    }
}

impl Conversation {
    pub fn new() -> Self {
        Self::created_at(Utc::now())
    }

    pub fn created_at(at: DateTime<Utc>) -> Self {
        Self {
            turns: Vec::new(),
            created_at: at,
        }
    }

    pub fn turns(&self) -> &[Turn] {
        &self.turns
    }

    pub fn started(&self) -> DateTime<Utc> {
        self.created_at
    }

    pub fn pilot_turns(&self) -> impl Iterator<Item = &str> {
        self.turns
            .iter()
            .filter(|t| t.speaker == Speaker::Pilot)
            .map(|t| t.text.as_str())
    }

    /// Returns a copy with one more pilot turn.
    pub fn append_instruction(&self, text: &str) -> Result<Conversation, ParseError> {
        if text.trim().is_empty() {
            return Err(ParseError::InvalidInstruction);
        }
        let mut next = self.clone();
        next.turns.push(Turn {
            speaker: Speaker::Pilot,
            text: text.to_string(),
        });
        Ok(next)
    }

    /// Returns a copy with a system reply appended. The first turn must be
    /// the pilot's, so a system reply to an empty conversation is dropped.
    pub fn append_system(&self, text: &str) -> Conversation {
        let mut next = self.clone();
        if !next.turns.is_empty() {
            next.turns.push(Turn {
                speaker: Speaker::System,
                text: text.to_string(),
            });
        }
        next
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RangeClass {
    Short,
    Medium,
    Long,
}

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Preference {
    #[default]
    Balanced,
    Cheapest,
    Fastest,
    Shortest,
}

impl Preference {
    pub const ALL: [Preference; 4] = [
        Preference::Balanced,
        Preference::Cheapest,
        Preference::Fastest,
        Preference::Shortest,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Preference::Balanced => "balanced",
            Preference::Cheapest => "cheapest",
            Preference::Fastest => "fastest",
            Preference::Shortest => "shortest",
        }
    }
}

impl FromStr for Preference {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preference::ALL
            .into_iter()
            .find(|p| p.as_str() == s.trim().to_lowercase())
            .ok_or_else(|| format!("unknown preference {s:?}"))
    }
}

impl fmt::Display for Preference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A place named by the pilot, with its match once resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaceRef {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolved: Option<GeoPoint>,
}

impl PlaceRef {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            node_id: None,
            resolved: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoiRequirement {
    pub category: String,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Patrol {
    pub center_ref: PlaceRef,
    pub radius_m: f64,
    pub target: String,
}

/// Named upper bounds on a mission.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Constraints {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_duration_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_leg_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_total_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionSpec {
    /// Unset until stated by the pilot, implied by a patrol, or derived
    /// from the resolved endpoints.
    pub range_class: Option<RangeClass>,
    pub start_ref: Option<PlaceRef>,
    pub end_ref: Option<PlaceRef>,
    pub poi_requirements: Vec<PoiRequirement>,
    pub patrol: Option<Patrol>,
    pub fleet_size: u32,
    pub preference: Preference,
    pub constraints: Constraints,
}

impl Default for MissionSpec {
    fn default() -> Self {
        Self {
            range_class: None,
            start_ref: None,
            end_ref: None,
            poi_requirements: Vec::new(),
            patrol: None,
            fleet_size: 1,
            preference: Preference::Balanced,
            constraints: Constraints::default(),
        }
    }
}

impl MissionSpec {
    /// Fields still needed before the spec can be routed.
    pub fn missing_fields(&self) -> Vec<String> {
        let mut missing = Vec::new();
        match &self.patrol {
            Some(p) => {
                if p.center_ref.text.is_empty() {
                    missing.push("patrol.center".to_string());
                }
                if !(p.radius_m > 0.0) {
                    missing.push("patrol.radius".to_string());
                }
            }
            None => {
                if self.start_ref.is_none() {
                    missing.push("start".to_string());
                }
                if self.end_ref.is_none() {
                    missing.push("end".to_string());
                }
            }
        }
        missing
    }

    /// One-line description used as the system's reply.
    pub fn summary(&self) -> String {
        let mut parts = Vec::new();
        if let Some(p) = &self.patrol {
            parts.push(format!(
                "patrol {} within {:.0} m of {}",
                p.target, p.radius_m, p.center_ref.text
            ));
        }
        if let Some(s) = &self.start_ref {
            parts.push(format!("from {}", s.text));
        }
        if let Some(e) = &self.end_ref {
            parts.push(format!("to {}", e.text));
        }
        if !self.poi_requirements.is_empty() {
            let cats: Vec<&str> = self
                .poi_requirements
                .iter()
                .map(|r| r.category.as_str())
                .collect();
            parts.push(format!("visiting {}", cats.join(", ")));
        }
        parts.push(format!("fleet {}", self.fleet_size));
        parts.push(format!("preference {}", self.preference));
        if let Some(r) = self.range_class {
            parts.push(format!("{r:?} range").to_lowercase());
        }
        if let Some(d) = self.constraints.max_duration_s {
            parts.push(format!("max duration {d:.0} s"));
        }
        parts.join("; ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ParseOutcome {
    Ready {
        spec: MissionSpec,
    },
    NeedsClarification {
        draft: MissionSpec,
        missing: Vec<String>,
    },
}

impl ParseOutcome {
    pub fn spec(&self) -> &MissionSpec {
        match self {
            ParseOutcome::Ready { spec } => spec,
            ParseOutcome::NeedsClarification { draft, .. } => draft,
        }
    }

    pub fn into_spec(self) -> MissionSpec {
        match self {
            ParseOutcome::Ready { spec } => spec,
            ParseOutcome::NeedsClarification { draft, .. } => draft,
        }
    }

    pub fn from_spec(spec: MissionSpec) -> Self {
        let missing = spec.missing_fields();
        if missing.is_empty() {
            ParseOutcome::Ready { spec }
        } else {
            ParseOutcome::NeedsClarification {
                draft: spec,
                missing,
            }
        }
    }
}

/// Node role in the flight graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum NodeType {
    Takeoff,
    Landing,
    RefuelAirport,
    Poi(String),
    PatrolCell,
}

impl NodeType {
    pub fn is_airport(&self) -> bool {
        matches!(
            self,
            NodeType::Takeoff | NodeType::Landing | NodeType::RefuelAirport
        )
    }
}

impl fmt::Display for NodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeType::Takeoff => f.write_str("takeoff"),
            NodeType::Landing => f.write_str("landing"),
            NodeType::RefuelAirport => f.write_str("refuel_airport"),
            NodeType::Poi(c) => write!(f, "poi:{c}"),
            NodeType::PatrolCell => f.write_str("patrol_cell"),
        }
    }
}

impl FromStr for NodeType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "takeoff" => Ok(NodeType::Takeoff),
            "landing" => Ok(NodeType::Landing),
            "refuel_airport" => Ok(NodeType::RefuelAirport),
            "patrol_cell" => Ok(NodeType::PatrolCell),
            _ => match s.strip_prefix("poi:") {
                Some(c) if !c.is_empty() => Ok(NodeType::Poi(c.to_string())),
                _ => Err(format!("unknown node type {s:?}")),
            },
        }
    }
}

impl From<NodeType> for String {
    fn from(t: NodeType) -> Self {
        t.to_string()
    }
}

impl TryFrom<String> for NodeType {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

//! Scenario files.
//!
//! A scenario is a JSON document:
//!
//! ```json
//! {
//!   "nodes": ["S", "a", "D"],
//!   "edges": [["S", "a", 1], ["a", "D", 2]],
//!   "threshold": 4,
//!   "source": "S",
//!   "dest": "D",
//!   "malicious": ["a"]
//! }
//! ```
//!
//! `failed`, `malicious` and `delayers` default to empty, `packet_count` to
//! 1, `payload_size` to 100 bytes, `collision_mode` to `"off"` and `seed`
//! to 0. Collisions are enabled with `{"on": p}`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::routing::CollisionMode;
use crate::topology::{build_adjacency, NodeId, TopologyError, Weight, WeightedAdjacency};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("field `edges`: {0}")]
    Topology(#[from] TopologyError),
}

impl ScenarioError {
    fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        ScenarioError::Invalid {
            field,
            reason: reason.into(),
        }
    }
}

fn default_packet_count() -> u64 {
    1
}

fn default_payload_size() -> u64 {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<(NodeId, NodeId, Weight)>,
    pub threshold: Weight,
    pub source: NodeId,
    pub dest: NodeId,
    #[serde(default)]
    pub failed: BTreeSet<NodeId>,
    #[serde(default)]
    pub malicious: BTreeSet<NodeId>,
    /// Node to forwarding-latency multiplier.
    #[serde(default)]
    pub delayers: BTreeMap<NodeId, u32>,
    #[serde(default = "default_packet_count")]
    pub packet_count: u64,
    #[serde(default = "default_payload_size")]
    pub payload_size: u64,
    #[serde(default)]
    pub collision_mode: CollisionMode,
    #[serde(default)]
    pub seed: u64,
}

impl Scenario {
    /// Parses and validates a scenario document.
    pub fn from_json(text: &str) -> Result<Scenario, ScenarioError> {
        let scenario: Scenario = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn adjacency(&self) -> Result<WeightedAdjacency, TopologyError> {
        build_adjacency(&self.nodes, &self.edges)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let adj = self.adjacency()?;
        if self.threshold < 1 {
            return Err(ScenarioError::invalid("threshold", "must be at least 1"));
        }
        for (field, node) in [("source", &self.source), ("dest", &self.dest)] {
            if !adj.contains(node) {
                return Err(ScenarioError::invalid(
                    field,
                    format!("unknown node `{node}`"),
                ));
            }
        }
        if self.source == self.dest {
            return Err(ScenarioError::invalid("dest", "must differ from source"));
        }
        let endpoints = [&self.source, &self.dest];
        let sets: [(&'static str, Vec<&NodeId>); 3] = [
            ("failed", self.failed.iter().collect()),
            ("malicious", self.malicious.iter().collect()),
            ("delayers", self.delayers.keys().collect()),
        ];
        for (field, members) in sets {
            for node in members {
                if !adj.contains(node) {
                    return Err(ScenarioError::invalid(
                        field,
                        format!("unknown node `{node}`"),
                    ));
                }
                if endpoints.contains(&node) {
                    return Err(ScenarioError::invalid(
                        field,
                        format!("`{node}` is an endpoint"),
                    ));
                }
            }
        }
        if let Some((node, _)) = self.delayers.iter().find(|(_, m)| **m == 0) {
            return Err(ScenarioError::invalid(
                "delayers",
                format!("multiplier for `{node}` must be at least 1"),
            ));
        }
        if let CollisionMode::On(p) = self.collision_mode {
            if !(0.0..=1.0).contains(&p) {
                return Err(ScenarioError::invalid(
                    "collision_mode",
                    format!("probability {p} outside [0, 1]"),
                ));
            }
        }
        Ok(())
    }
}

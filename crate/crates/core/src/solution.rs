//! Network-level optimization results.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    FeasibleWithinGap,
    Infeasible,
    TimedOut,
    Unbounded,
}

impl SolveStatus {
    /// Whether the status comes with a usable flow assignment.
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::FeasibleWithinGap)
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Share of a two-stream blend carried by `first_edge`: `parts` out of `of`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlendShare {
    pub first_edge: String,
    pub parts: u32,
    pub of: u32,
}

/// Flows (m³/h) per edge id, exit concentrations per component and
/// pollutant, and edge activity. A `TimedOut` solution may still carry the
/// best assignment found; check `flows.is_empty()`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub status: SolveStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(default)]
    pub flows: BTreeMap<String, f64>,
    #[serde(default)]
    pub active: BTreeMap<String, bool>,
    #[serde(default)]
    pub concentrations: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub blends: BTreeMap<String, BlendShare>,
    /// Wall-clock time; not part of the serialized document so that
    /// identical solves serialize identically.
    #[serde(skip)]
    pub solve_time: Duration,
}

impl Solution {
    pub fn empty(status: SolveStatus) -> Self {
        Solution {
            status,
            objective_value: None,
            gap: None,
            flows: BTreeMap::new(),
            active: BTreeMap::new(),
            concentrations: BTreeMap::new(),
            blends: BTreeMap::new(),
            solve_time: Duration::ZERO,
        }
    }

    pub fn has_flows(&self) -> bool {
        !self.flows.is_empty()
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("solution serialization is infallible");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

//! Structural and attribute checks on a [`Network`], and role assignment.
//!
//! Validation never fails: every problem found is listed in the returned
//! [`ValidationReport`]. A report without violations means the network can
//! be handed to the preprocessing and model-building stages.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::network::{Network, EDGE_SEPARATOR};
use crate::topology::Topology;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ViolationKind {
    SrSfConflict,
    RrRfConflict,
    DanglingEndpoint,
    SelfLoop,
    DuplicateEdge,
    Cycle,
    NegativeValue,
    NonFiniteValue,
    BoundsInverted,
    DuplicatePollutant,
    UnknownPollutant,
    InvalidIdentifier,
    SourceWithInflow,
    SinkWithOutflow,
    InvalidObjective,
}

impl ViolationKind {
    pub fn label(self) -> &'static str {
        match self {
            ViolationKind::SrSfConflict => "SR/SF conflict",
            ViolationKind::RrRfConflict => "RR/RF conflict",
            ViolationKind::DanglingEndpoint => "dangling endpoint",
            ViolationKind::SelfLoop => "self-loop",
            ViolationKind::DuplicateEdge => "duplicate edge",
            ViolationKind::Cycle => "cycle",
            ViolationKind::NegativeValue => "negative value",
            ViolationKind::NonFiniteValue => "non-finite value",
            ViolationKind::BoundsInverted => "lower bound above upper bound",
            ViolationKind::DuplicatePollutant => "duplicate pollutant",
            ViolationKind::UnknownPollutant => "unknown pollutant",
            ViolationKind::InvalidIdentifier => "invalid identifier",
            ViolationKind::SourceWithInflow => "source with inflow",
            ViolationKind::SinkWithOutflow => "sink with outflow",
            ViolationKind::InvalidObjective => "invalid objective",
        }
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub element: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    fn push(&mut self, kind: ViolationKind, element: &str, message: impl Into<String>) {
        self.violations.push(Violation { kind, element: element.to_string(), message: message.into() });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "error: {} at `{}`: {}", v.kind, v.element, v.message)?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

pub fn validate(net: &Network) -> ValidationReport {
    let mut report = ValidationReport::default();

    let mut pollutants = BTreeSet::new();
    for p in &net.pollutants {
        if !pollutants.insert(p.id.as_str()) {
            report.push(ViolationKind::DuplicatePollutant, &p.id, "pollutant id appears more than once");
        }
    }

    for (id, component) in &net.components {
        if id.is_empty() || id.contains(EDGE_SEPARATOR) {
            report.push(ViolationKind::InvalidIdentifier, id, format!("component ids must be non-empty and must not contain `{EDGE_SEPARATOR}`"));
        }
        let a = &component.attrs;
        if a.sr.is_some() && a.sf.is_some() {
            report.push(ViolationKind::SrSfConflict, id, "both SR and SF are set; the outlet must be determined one way");
        }
        let scalars = [
            ("capacity", a.capacity),
            ("supply", a.supply),
            ("demand", a.demand),
            ("sr", a.sr),
            ("sf", a.sf),
            ("fixed_cost", a.fixed_cost),
            ("variable_cost", a.variable_cost),
            ("fixed_energy", a.fixed_energy),
            ("variable_energy", a.variable_energy),
        ];
        for (name, value) in scalars {
            check_number(&mut report, id, name, value);
        }
        for (p, q) in &a.quality {
            let element = format!("{id}/{p}");
            if !pollutants.contains(p.as_str()) {
                report.push(ViolationKind::UnknownPollutant, &element, "quality attributes reference an undeclared pollutant");
            }
            if q.rr.is_some() && q.rf.is_some() {
                report.push(ViolationKind::RrRfConflict, &element, "both RR and RF are set for the same pollutant");
            }
            for (name, value) in [("rr", q.rr), ("rf", q.rf), ("lower", q.lower), ("upper", q.upper), ("given", q.given)] {
                check_number(&mut report, &element, name, value);
            }
            if let (Some(l), Some(u)) = (q.lower, q.upper) {
                if l > u {
                    report.push(ViolationKind::BoundsInverted, &element, format!("lower {l} exceeds upper {u}"));
                }
            }
        }
    }

    let mut seen = BTreeSet::new();
    for edge in &net.edges {
        let id = edge.id();
        for end in [&edge.from, &edge.to] {
            if !net.components.contains_key(end) {
                report.push(ViolationKind::DanglingEndpoint, &id, format!("component `{end}` does not exist"));
            }
        }
        if edge.from == edge.to {
            report.push(ViolationKind::SelfLoop, &id, "edge starts and ends at the same component");
        }
        if !seen.insert((edge.from.as_str(), edge.to.as_str())) {
            report.push(ViolationKind::DuplicateEdge, &id, "edge appears more than once");
        }
        check_number(&mut report, &id, "capacity", edge.capacity);
    }

    let topo = Topology::new(net);
    if let Err(crate::Error::Cyclic(at)) = topo.topological_order() {
        // Self-loops are reported on their own.
        if !report.has(ViolationKind::SelfLoop) {
            report.push(ViolationKind::Cycle, &at, "the network must be acyclic");
        }
    }

    for (v, id) in net.components.keys().enumerate() {
        let tag = net.components[id].tag;
        if tag.is_source() && !topo.inbound(v).is_empty() {
            report.push(ViolationKind::SourceWithInflow, id, "sources cannot receive flow");
        }
        if tag.is_sink() && !topo.outbound(v).is_empty() {
            report.push(ViolationKind::SinkWithOutflow, id, "applications and discharge points cannot send flow");
        }
        if topo.inbound(v).is_empty() && topo.outbound(v).is_empty() {
            report.warnings.push(format!("component `{id}` is isolated"));
        }
    }

    if let Some(objective) = &net.objective {
        if let Err(message) = check_objective(net, objective) {
            report.push(ViolationKind::InvalidObjective, "objective", message);
        }
    }

    report
}

fn check_number(report: &mut ValidationReport, element: &str, name: &str, value: Option<f64>) {
    match value {
        Some(v) if !v.is_finite() => report.push(ViolationKind::NonFiniteValue, element, format!("{name} is not finite")),
        Some(v) if v < 0.0 => report.push(ViolationKind::NegativeValue, element, format!("{name} = {v} is negative")),
        _ => {}
    }
}

/// Scope and sense checks shared by validation and model building.
pub fn check_objective(net: &Network, objective: &crate::network::Objective) -> Result<(), String> {
    use crate::network::{ObjectiveKind, Sense};
    if objective.scope.is_empty() {
        return Err("scope is empty".into());
    }
    if matches!(objective.kind, ObjectiveKind::Cost | ObjectiveKind::Energy) && objective.sense == Sense::Maximize {
        return Err(format!("{:?} objectives can only be minimized", objective.kind));
    }
    for element in &objective.scope {
        if !net.components.contains_key(element) && net.edge(element).is_none() {
            return Err(format!("scope element `{element}` does not exist"));
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Provider,
    Intermediate,
    Receiver,
    Unclassified,
}

/// Assigns each component a role from its edge incidence alone.
/// Isolated components are `Unclassified` (validation warns about them).
pub fn classify(net: &Network) -> BTreeMap<String, Role> {
    let topo = Topology::new(net);
    net.components
        .keys()
        .enumerate()
        .map(|(v, id)| (id.clone(), role_of(&topo, v)))
        .collect()
}

pub(crate) fn role_of(topo: &Topology, v: usize) -> Role {
    match (topo.inbound(v).is_empty(), topo.outbound(v).is_empty()) {
        (true, true) => Role::Unclassified,
        (true, false) => Role::Provider,
        (false, false) => Role::Intermediate,
        (false, true) => Role::Receiver,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Component, ComponentTag, Edge, Objective, ObjectiveKind, Pollutant, Sense};

    fn small() -> Network {
        let mut net = Network::new().with_pollutant(Pollutant::new("COD", "mg/L"));
        net.add_component("S", Component::new(ComponentTag::WastewaterSource)).supply = Some(10.0);
        net.add_component("T", Component::new(ComponentTag::Treatment)).sr = Some(0.8);
        net.add_component("D", Component::new(ComponentTag::Discharge));
        net.add_edge(Edge::new("S", "T"));
        net.add_edge(Edge::new("T", "D"));
        net
    }

    #[test]
    fn empty_network_is_valid() {
        assert_eq!(validate(&Network::new()), ValidationReport::default());
    }

    #[test]
    fn sr_sf_conflict_is_reported() {
        let mut net = small();
        net.components.get_mut("T").unwrap().attrs.sf = Some(300.0);
        let report = validate(&net);
        assert!(report.has(ViolationKind::SrSfConflict));
        assert_eq!(report.violations[0].kind.label(), "SR/SF conflict");
    }

    #[test]
    fn rr_rf_conflict_is_reported() {
        let mut net = small();
        let q = net.components.get_mut("T").unwrap().attrs.quality_mut("COD");
        q.rr = Some(0.5);
        q.rf = Some(3.0);
        assert!(validate(&net).has(ViolationKind::RrRfConflict));
    }

    #[test]
    fn dangling_endpoint_is_reported() {
        let mut net = small();
        net.add_edge(Edge::new("T", "nowhere"));
        let report = validate(&net);
        assert!(report.has(ViolationKind::DanglingEndpoint));
    }

    #[test]
    fn cycles_and_negatives_are_reported() {
        let mut net = small();
        net.add_component("U", Component::new(ComponentTag::Treatment)).capacity = Some(-1.0);
        net.add_edge(Edge::new("T", "U"));
        net.add_edge(Edge::new("U", "T"));
        let report = validate(&net);
        assert!(report.has(ViolationKind::Cycle));
        assert!(report.has(ViolationKind::NegativeValue));
    }

    #[test]
    fn objective_checks() {
        let mut net = small();
        net.objective = Some(Objective::new(ObjectiveKind::Cost, Sense::Maximize, ["T"]));
        assert!(validate(&net).has(ViolationKind::InvalidObjective));
        net.objective = Some(Objective::new(ObjectiveKind::TotalFlow, Sense::Maximize, ["S->T"]));
        assert!(validate(&net).is_valid());
    }

    #[test]
    fn validation_is_pure() {
        let mut net = small();
        net.components.get_mut("T").unwrap().attrs.sf = Some(1.0);
        assert_eq!(validate(&net), validate(&net));
    }

    #[test]
    fn roles_follow_incidence() {
        let mut net = small();
        net.add_component("lonely", Component::new(ComponentTag::Tank));
        let roles = classify(&net);
        assert_eq!(roles["S"], Role::Provider);
        assert_eq!(roles["T"], Role::Intermediate);
        assert_eq!(roles["D"], Role::Receiver);
        assert_eq!(roles["lonely"], Role::Unclassified);
        assert!(validate(&net).warnings.iter().any(|w| w.contains("lonely")));
    }
}

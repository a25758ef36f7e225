//! Linear objective coefficients, shared by the model builder and the
//! solution checker so both evaluate the same expression.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::network::{edge_id, Component, Objective, ObjectiveKind, Sense};

/// Per-edge coefficients on the flow (`flow`) and on the activity binary
/// (`active`), indexed like the edge list they were computed from.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveTerms {
    pub sense: Sense,
    pub flow: Vec<f64>,
    pub active: Vec<f64>,
}

impl ObjectiveTerms {
    /// Value for concrete flows; an edge counts as active above `tol`.
    pub fn evaluate(&self, flows: &[f64], tol: f64) -> f64 {
        flows
            .iter()
            .enumerate()
            .map(|(e, &x)| self.flow[e] * x + if x > tol { self.active[e] } else { 0.0 })
            .sum()
    }
}

/// Coefficients for `objective` over an edge list given by original
/// endpoints; `None` entries (dummy cascade edges) get zero coefficients.
///
/// A scoped component contributes its outbound edges when it has no inbound
/// edge (a provider) and its inbound edges otherwise. Edge ids are only
/// accepted for `TotalFlow`.
pub fn objective_terms(
    components: &BTreeMap<String, Component>,
    edges: &[Option<(String, String)>],
    objective: &Objective,
) -> Result<ObjectiveTerms> {
    if objective.scope.is_empty() {
        return Err(Error::InvalidObjective("scope is empty".into()));
    }
    let costly = matches!(objective.kind, ObjectiveKind::Cost | ObjectiveKind::Energy);
    if costly && objective.sense == Sense::Maximize {
        return Err(Error::InvalidObjective(format!("{:?} objectives can only be minimized", objective.kind)));
    }

    let has_inflow: BTreeSet<&str> = edges.iter().flatten().map(|(_, to)| to.as_str()).collect();
    let mut flow = vec![0.0; edges.len()];
    let mut active = vec![0.0; edges.len()];
    let scope: BTreeSet<&String> = objective.scope.iter().collect();
    for element in scope {
        if let Some(component) = components.get(element.as_str()) {
            let provider = !has_inflow.contains(element.as_str());
            let (vc, fc) = match objective.kind {
                ObjectiveKind::TotalFlow => (1.0, 0.0),
                ObjectiveKind::Cost => (component.attrs.variable_cost.unwrap_or(0.0), component.attrs.fixed_cost.unwrap_or(0.0)),
                ObjectiveKind::Energy => (component.attrs.variable_energy.unwrap_or(0.0), component.attrs.fixed_energy.unwrap_or(0.0)),
            };
            for (e, ends) in edges.iter().enumerate() {
                let Some((from, to)) = ends else { continue };
                let incident = if provider { from == element } else { to == element };
                if incident {
                    flow[e] += vc;
                    active[e] += fc;
                }
            }
            continue;
        }
        let position = edges.iter().position(|ends| matches!(ends, Some((a, b)) if edge_id(a, b) == *element));
        match position {
            Some(_) if costly => {
                return Err(Error::InvalidObjective(format!("{:?} scope must list components, not edge `{element}`", objective.kind)))
            }
            Some(e) => flow[e] += 1.0,
            None => return Err(Error::InvalidObjective(format!("scope element `{element}` does not exist"))),
        }
    }
    if flow.iter().chain(&active).all(|&c| c == 0.0) {
        return Err(Error::EmptyObjective);
    }
    Ok(ObjectiveTerms { sense: objective.sense, flow, active })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{ComponentTag, Edge, Network};

    fn net() -> Network {
        let mut net = Network::new();
        net.add_component("S", Component::new(ComponentTag::FreshWaterSource)).variable_cost = Some(0.5);
        let t = net.add_component("T", Component::new(ComponentTag::Treatment));
        t.variable_cost = Some(2.0);
        t.fixed_cost = Some(10.0);
        net.add_component("A", Component::new(ComponentTag::Application));
        net.add_edge(Edge::new("S", "T"));
        net.add_edge(Edge::new("T", "A"));
        net
    }

    fn ends(net: &Network) -> Vec<Option<(String, String)>> {
        net.edges.iter().map(|e| Some((e.from.clone(), e.to.clone()))).collect()
    }

    #[test]
    fn cost_uses_inbound_edges() {
        let net = net();
        let obj = Objective::new(ObjectiveKind::Cost, Sense::Minimize, ["T"]);
        let terms = objective_terms(&net.components, &ends(&net), &obj).unwrap();
        assert_eq!(terms.flow, vec![2.0, 0.0]);
        assert_eq!(terms.active, vec![10.0, 0.0]);
        assert_eq!(terms.evaluate(&[3.0, 3.0], 1e-9), 16.0);
    }

    #[test]
    fn providers_use_outbound_edges() {
        let net = net();
        let obj = Objective::new(ObjectiveKind::Cost, Sense::Minimize, ["S"]);
        let terms = objective_terms(&net.components, &ends(&net), &obj).unwrap();
        assert_eq!(terms.flow, vec![0.5, 0.0]);
    }

    #[test]
    fn empty_cost_is_rejected() {
        let net = net();
        let obj = Objective::new(ObjectiveKind::Energy, Sense::Minimize, ["T"]);
        assert!(matches!(objective_terms(&net.components, &ends(&net), &obj), Err(Error::EmptyObjective)));
    }

    #[test]
    fn flow_over_edge() {
        let net = net();
        let obj = Objective::new(ObjectiveKind::TotalFlow, Sense::Maximize, ["T->A"]);
        let terms = objective_terms(&net.components, &ends(&net), &obj).unwrap();
        assert_eq!(terms.flow, vec![0.0, 1.0]);
        let bad = Objective::new(ObjectiveKind::TotalFlow, Sense::Maximize, ["A->T"]);
        assert!(objective_terms(&net.components, &ends(&net), &bad).is_err());
    }
}

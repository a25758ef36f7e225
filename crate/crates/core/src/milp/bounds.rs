//! Variable bounds and big-M values implied by the network data.
//!
//! Flow bounds are propagated forwards (supplies, capacities, reduction
//! rates) and backwards (downstream capacity divided by the reduction rate)
//! until they stop shrinking. Every bound is implied by the model's own
//! rows, so tightening a variable to it never removes a feasible point.
//! Concentration bounds follow the same sweep: sources contribute their
//! given quality, RF components their fixed value, and RR components scale
//! the largest upstream bound.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{FlowReduction, Network, QualityReduction};
use crate::topology::Topology;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BigMPolicy {
    /// Upper bound on any edge flow or component throughput.
    pub flow_m: f64,
    /// Upper bound on any concentration, per pollutant, with a safety factor of 2.
    pub quality_m: BTreeMap<String, f64>,
    pub mu: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DerivedBounds {
    /// Upper bound of each edge flow, by edge position.
    pub edge_upper: Vec<f64>,
    /// Range of each concentration variable, by component index then pollutant position.
    pub quality_range: Vec<Vec<(f64, f64)>>,
    pub policy: BigMPolicy,
}

fn sum(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, |acc, v| acc + v)
}

/// Propagates flow and concentration bounds. `flow_bound` caps any edge
/// left unbounded by the data; without it such an edge is an error.
pub fn derive_bounds(net: &Network, flow_bound: Option<f64>, mu: f64, exit_quality: bool) -> Result<DerivedBounds> {
    let topo = Topology::new(net);
    let order = topo.topological_order()?;
    let n = topo.len();
    let inf = f64::INFINITY;
    let mut edge: Vec<f64> = net.edges.iter().map(|e| e.capacity.unwrap_or(inf)).collect();
    let mut inflow = vec![inf; n];
    let mut outflow = vec![inf; n];

    let attrs = |v: usize| &net.components[topo.id(v)].attrs;

    for _round in 0..=2 * n + 2 {
        let before = (edge.clone(), inflow.clone(), outflow.clone());
        for &v in &order {
            let a = attrs(v);
            let ins = topo.inbound(v);
            let outs = topo.outbound(v);
            if !ins.is_empty() {
                let mut bound = sum(ins.iter().map(|&e| edge[e]));
                if let Some(c) = a.capacity {
                    bound = bound.min(c);
                }
                inflow[v] = inflow[v].min(bound);
            }
            if !outs.is_empty() {
                let mut bound = if ins.is_empty() {
                    a.supply.unwrap_or(inf)
                } else {
                    match a.flow_reduction().unwrap_or(FlowReduction::Rate(1.0)) {
                        FlowReduction::Rate(sr) if sr > 0.0 => sr * inflow[v],
                        FlowReduction::Rate(_) => 0.0,
                        FlowReduction::Fixed(sf) => sf,
                    }
                };
                if let Some(c) = a.capacity {
                    bound = bound.min(c);
                }
                bound = bound.min(sum(outs.iter().map(|&e| edge[e])));
                outflow[v] = outflow[v].min(bound);
                for &e in outs {
                    edge[e] = edge[e].min(outflow[v]);
                }
            }
            for &e in ins {
                edge[e] = edge[e].min(inflow[v]);
            }
        }
        for &v in order.iter().rev() {
            let a = attrs(v);
            let ins = topo.inbound(v);
            let outs = topo.outbound(v);
            if outs.is_empty() || ins.is_empty() {
                continue;
            }
            outflow[v] = outflow[v].min(sum(outs.iter().map(|&e| edge[e])));
            if let FlowReduction::Rate(sr) = a.flow_reduction().unwrap_or(FlowReduction::Rate(1.0)) {
                if sr > 0.0 {
                    inflow[v] = inflow[v].min(outflow[v] / sr);
                }
            }
            for &e in ins {
                edge[e] = edge[e].min(inflow[v]);
            }
        }
        if before == (edge.clone(), inflow.clone(), outflow.clone()) {
            break;
        }
    }

    for (e, bound) in edge.iter_mut().enumerate() {
        if bound.is_infinite() {
            match flow_bound {
                Some(m) => *bound = m,
                None => return Err(Error::UnboundedBigM(net.edges[e].id())),
            }
        }
    }
    let flow_m = edge.iter().copied().fold(0.0, f64::max);

    // Concentrations: (lower, upper) of the variable, plus the bound that holds
    // whenever the component is active, which is what downstream nodes see.
    let pollutants: Vec<&str> = net.pollutant_ids().collect();
    let mut quality_range = vec![vec![(0.0, 0.0); pollutants.len()]; n];
    let mut active_upper = vec![vec![0.0; pollutants.len()]; n];
    for &v in &order {
        let a = attrs(v);
        let ins = topo.inbound(v);
        for (pi, p) in pollutants.iter().enumerate() {
            if ins.is_empty() {
                if topo.outbound(v).is_empty() {
                    continue;
                }
                let given = a.given_quality(p).ok_or_else(|| Error::MissingQuality {
                    component: topo.id(v).to_string(),
                    pollutant: p.to_string(),
                })?;
                quality_range[v][pi] = (given, given);
                active_upper[v][pi] = given;
                continue;
            }
            let upstream = ins
                .iter()
                .map(|&e| {
                    let (src, _) = topo.ends(e).expect("validated edge");
                    active_upper[src][pi]
                })
                .fold(0.0, f64::max);
            let (mut active, mut var_upper) = match a.quality_reduction(p) {
                QualityReduction::Fixed(rf) => (rf, rf),
                QualityReduction::Rate(rr) => (rr * upstream, rr * upstream),
            };
            if let QualityReduction::Rate(rr) = a.quality_reduction(p) {
                if exit_quality {
                    let (lower, upper) = a.quality_bounds(p);
                    if let Some(u) = upper {
                        active = active.min(rr * u);
                        var_upper = active;
                    }
                    if let Some(l) = lower {
                        var_upper = var_upper.max(rr * l);
                    }
                }
            }
            active_upper[v][pi] = active;
            quality_range[v][pi] = (0.0, var_upper);
        }
    }
    let quality_m = pollutants
        .iter()
        .enumerate()
        .map(|(pi, p)| {
            let max = quality_range.iter().map(|r| r[pi].1).fold(0.0, f64::max);
            (p.to_string(), 2.0 * max)
        })
        .collect();

    Ok(DerivedBounds { edge_upper: edge, quality_range, policy: BigMPolicy { flow_m, quality_m, mu } })
}

pub fn derive_big_m(net: &Network) -> Result<BigMPolicy> {
    derive_bounds(net, None, super::DEFAULT_MU, true).map(|b| b.policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Component, ComponentTag, Edge, Pollutant};

    #[test]
    fn single_provider_sets_flow_m() {
        let mut net = Network::new();
        net.add_component("S", Component::new(ComponentTag::WastewaterSource)).supply = Some(100.0);
        net.add_component("D", Component::new(ComponentTag::Discharge));
        net.add_edge(Edge::new("S", "D"));
        let policy = derive_big_m(&net).unwrap();
        assert_eq!(policy.flow_m, 100.0);
        assert_eq!(policy.mu, 1e-3);
    }

    #[test]
    fn quality_m_doubles_the_largest_given_value() {
        let mut net = Network::new().with_pollutant(Pollutant::new("COD", "mg/L"));
        for (id, c) in [("A", 10.0), ("B", 20.0)] {
            let s = net.add_component(id, Component::new(ComponentTag::WastewaterSource));
            s.supply = Some(5.0);
            s.quality_mut("COD").given = Some(c);
        }
        net.add_component("T", Component::new(ComponentTag::Treatment)).quality_mut("COD").rr = Some(0.5);
        net.add_component("D", Component::new(ComponentTag::Discharge));
        net.add_edge(Edge::new("A", "T"));
        net.add_edge(Edge::new("B", "T"));
        net.add_edge(Edge::new("T", "D"));
        let policy = derive_big_m(&net).unwrap();
        assert_eq!(policy.quality_m["COD"], 40.0);
        assert_eq!(policy.flow_m, 10.0);
    }

    #[test]
    fn backward_pass_uses_downstream_capacity() {
        let mut net = Network::new();
        net.add_component("F", Component::new(ComponentTag::FreshWaterSource));
        net.add_component("T", Component::new(ComponentTag::Treatment)).sr = Some(0.5);
        net.add_component("A", Component::new(ComponentTag::Application)).capacity = Some(4.0);
        net.add_edge(Edge::new("F", "T"));
        net.add_edge(Edge::new("T", "A"));
        let bounds = derive_bounds(&net, None, 1e-3, true).unwrap();
        assert_eq!(bounds.edge_upper, vec![8.0, 4.0]);
    }

    #[test]
    fn unbounded_supply_is_an_error() {
        let mut net = Network::new();
        net.add_component("F", Component::new(ComponentTag::FreshWaterSource));
        net.add_component("A", Component::new(ComponentTag::Application));
        net.add_edge(Edge::new("F", "A"));
        assert!(matches!(derive_big_m(&net), Err(Error::UnboundedBigM(_))));
        let bounds = derive_bounds(&net, Some(50.0), 1e-3, true).unwrap();
        assert_eq!(bounds.edge_upper, vec![50.0]);
    }
}

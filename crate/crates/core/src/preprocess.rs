//! Reduction of blending points to at most two inflows.
//!
//! The discretized blending rows only describe mixtures of two streams. A
//! component with `n > 2` inflows is replaced by a cascade of `n - 2`
//! lossless dummy components: the first two inflows meet at the first dummy,
//! each further inflow joins the running mixture at the next dummy, and the
//! last inflow meets the cascade output at the original component.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{edge_id, split_edge_id, Component, ComponentTag, Edge, Network};
use crate::solution::{BlendShare, Solution};
use crate::topology::Topology;

/// Where an inserted element came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// A retargeted original edge, identified by its original id.
    Edge(String),
    /// A dummy component or cascade edge standing in for a blending point.
    Component(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalNetwork {
    pub network: Network,
    pub origin_map: BTreeMap<String, Origin>,
}

impl CanonicalNetwork {
    /// Wraps a network that already has at most two inflows per component.
    pub fn identity(network: Network) -> Self {
        CanonicalNetwork { network, origin_map: BTreeMap::new() }
    }

    /// Original id of the edge at `index`, or `None` for cascade edges.
    pub fn original_edge_id(&self, index: usize) -> Option<String> {
        let id = self.network.edges[index].id();
        match self.origin_map.get(&id) {
            None => Some(id),
            Some(Origin::Edge(orig)) => Some(orig.clone()),
            Some(Origin::Component(_)) => None,
        }
    }

    pub fn is_dummy(&self, component: &str) -> bool {
        matches!(self.origin_map.get(component), Some(Origin::Component(_)))
    }

    pub fn dummy_count(&self) -> usize {
        self.network.components.values().filter(|c| c.tag == ComponentTag::Dummy).count()
    }
}

fn dummy_id(net: &Network, taken: &BTreeSet<String>, node: &str, i: usize) -> String {
    let mut id = format!("{node}~{i}");
    while net.components.contains_key(&id) || taken.contains(&id) {
        id.push('~');
    }
    id
}

fn dummy_component(net: &Network) -> Component {
    let mut component = Component::new(ComponentTag::Dummy);
    component.attrs.sr = Some(1.0);
    for p in net.pollutant_ids() {
        component.attrs.quality_mut(p).rr = Some(1.0);
    }
    component
}

pub fn canonicalize(network: &Network) -> Result<CanonicalNetwork> {
    let topo = Topology::new(network);
    topo.topological_order()?;

    let mut net = network.clone();
    let mut origin_map = BTreeMap::new();
    let mut taken = BTreeSet::new();
    let mut chain_edges = Vec::new();

    for v in 0..topo.len() {
        let inflows = topo.inbound(v);
        let n = inflows.len();
        if n <= 2 {
            continue;
        }
        let node = topo.id(v).to_string();
        let dummies: Vec<String> = (1..=n - 2)
            .map(|i| {
                let id = dummy_id(network, &taken, &node, i);
                taken.insert(id.clone());
                id
            })
            .collect();
        for d in &dummies {
            net.components.insert(d.clone(), dummy_component(network));
            origin_map.insert(d.clone(), Origin::Component(node.clone()));
        }

        // Inflow p goes to dummy max(p, 1) - 1 (0-based); the last inflow stays.
        let mut merged_capacity = None;
        for (p, &e) in inflows.iter().enumerate().take(n - 1) {
            let target = &dummies[p.max(1) - 1];
            let original = net.edges[e].id();
            net.edges[e].to = target.clone();
            origin_map.insert(net.edges[e].id(), Origin::Edge(original));
            let cap = network.edges[e].capacity;
            merged_capacity = match p {
                0 => cap,
                _ => merged_capacity.zip(cap).map(|(a, b)| a + b),
            };
            if p >= 1 {
                let next = dummies.get(p).unwrap_or(&node);
                let mut chain = Edge::new(target.clone(), next.clone());
                chain.capacity = merged_capacity;
                origin_map.insert(chain.id(), Origin::Component(node.clone()));
                chain_edges.push(chain);
            }
        }
    }
    net.edges.extend(chain_edges);
    Ok(CanonicalNetwork { network: net, origin_map })
}

/// Maps a solution on the canonical network back onto the original one.
pub fn uncanonicalize(solution: &Solution, canonical: &CanonicalNetwork, original: &Network) -> Result<Solution> {
    let map_edge = |id: &str| -> Result<Option<String>> {
        match canonical.origin_map.get(id) {
            Some(Origin::Edge(orig)) => Ok(Some(orig.clone())),
            Some(Origin::Component(_)) => Ok(None),
            None if original.edge(id).is_some() => Ok(Some(id.to_string())),
            None => Err(Error::Corrupt(id.to_string())),
        }
    };

    let mut out = Solution { flows: BTreeMap::new(), active: BTreeMap::new(), concentrations: BTreeMap::new(), blends: BTreeMap::new(), ..solution.clone() };
    for (id, &flow) in &solution.flows {
        if let Some(orig) = map_edge(id)? {
            out.flows.insert(orig, flow);
        }
    }
    for (id, &on) in &solution.active {
        if let Some(orig) = map_edge(id)? {
            out.active.insert(orig, on);
        }
    }
    for (component, values) in &solution.concentrations {
        if canonical.is_dummy(component) {
            continue;
        }
        if !original.components.contains_key(component) {
            return Err(Error::Corrupt(component.clone()));
        }
        out.concentrations.insert(component.clone(), values.clone());
    }
    for (component, share) in &solution.blends {
        if canonical.is_dummy(component) {
            continue;
        }
        if !original.components.contains_key(component) {
            return Err(Error::Corrupt(component.clone()));
        }
        let share = match map_edge(&share.first_edge)? {
            Some(first_edge) => BlendShare { first_edge, ..share.clone() },
            None => {
                // The cascade edge carries the first share; restate it against
                // the other inflow, which is always an original edge.
                let (_, to) = split_edge_id(&share.first_edge).ok_or_else(|| Error::Corrupt(share.first_edge.clone()))?;
                let other = canonical
                    .network
                    .in_edges(to)
                    .map(Edge::id)
                    .find(|id| *id != share.first_edge)
                    .ok_or_else(|| Error::Corrupt(share.first_edge.clone()))?;
                let first_edge = map_edge(&other)?.ok_or_else(|| Error::Corrupt(other.clone()))?;
                BlendShare { first_edge, parts: share.of - share.parts, of: share.of }
            }
        };
        out.blends.insert(component.clone(), share);
    }
    Ok(out)
}

/// Edge id after retargeting, for looking up an original edge in a canonical network.
pub fn canonical_edge_id(canonical: &CanonicalNetwork, original_id: &str) -> Option<String> {
    canonical
        .origin_map
        .iter()
        .find(|(_, origin)| matches!(origin, Origin::Edge(orig) if orig == original_id))
        .map(|(id, _)| id.clone())
        .or_else(|| canonical.network.edge(original_id).map(|e| edge_id(&e.from, &e.to)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Pollutant;

    fn fan_in(n: usize) -> Network {
        let mut net = Network::new().with_pollutant(Pollutant::new("COD", "mg/L"));
        net.add_component("j", Component::new(ComponentTag::Treatment));
        net.add_component("out", Component::new(ComponentTag::Discharge));
        net.add_edge(Edge::new("j", "out"));
        for i in 0..n {
            let id = format!("s{i}");
            net.add_component(id.clone(), Component::new(ComponentTag::WastewaterSource));
            net.add_edge(Edge::new(id, "j").with_capacity(1.0 + i as f64));
        }
        net
    }

    fn in_degrees(net: &Network) -> BTreeMap<String, usize> {
        let mut deg: BTreeMap<String, usize> = net.components.keys().map(|k| (k.clone(), 0)).collect();
        for e in &net.edges {
            *deg.get_mut(&e.to).unwrap() += 1;
        }
        deg
    }

    #[test]
    fn three_inflows_fold_left() {
        let canon = canonicalize(&fan_in(3)).unwrap();
        let net = &canon.network;
        assert_eq!(canon.dummy_count(), 1);
        let d = "j~1";
        assert!(net.edge("s0->j~1").is_some());
        assert!(net.edge("s1->j~1").is_some());
        assert!(net.edge("s2->j").is_some());
        let chain = net.edge("j~1->j").unwrap();
        assert_eq!(chain.capacity, Some(3.0));
        assert_eq!(net.components[d].attrs.sr, Some(1.0));
        assert_eq!(net.components[d].attrs.quality["COD"].rr, Some(1.0));
        assert_eq!(canon.origin_map["s0->j~1"], Origin::Edge("s0->j".into()));
    }

    #[test]
    fn two_inflows_unchanged() {
        let net = fan_in(2);
        let canon = canonicalize(&net).unwrap();
        assert_eq!(canon.network, net);
        assert!(canon.origin_map.is_empty());
    }

    #[test]
    fn idempotent() {
        let canon = canonicalize(&fan_in(5)).unwrap();
        let again = canonicalize(&canon.network).unwrap();
        assert_eq!(again.network, canon.network);
    }

    #[test]
    fn five_inflows_cascade() {
        let canon = canonicalize(&fan_in(5)).unwrap();
        assert_eq!(canon.dummy_count(), 3);
        assert!(in_degrees(&canon.network).values().all(|&d| d <= 2));
        assert!(Topology::new(&canon.network).topological_order().is_ok());
        // Cascade capacity accumulates 1+2, then +3, then +4.
        assert_eq!(canon.network.edge("j~1->j~2").unwrap().capacity, Some(3.0));
        assert_eq!(canon.network.edge("j~3->j").unwrap().capacity, Some(10.0));
    }

    #[test]
    fn uncapacitated_inflow_leaves_cascade_unbounded() {
        let mut net = fan_in(3);
        net.edges[2].capacity = None;
        let canon = canonicalize(&net).unwrap();
        assert_eq!(canon.network.edge("j~1->j").unwrap().capacity, None);
    }

    #[test]
    fn maps_flows_back() {
        let net = fan_in(3);
        let canon = canonicalize(&net).unwrap();
        let mut sol = Solution::empty(crate::solution::SolveStatus::Optimal);
        sol.flows.insert("s0->j~1".into(), 10.0);
        sol.flows.insert("s1->j~1".into(), 5.0);
        sol.flows.insert("j~1->j".into(), 15.0);
        sol.flows.insert("s2->j".into(), 1.0);
        sol.flows.insert("j->out".into(), 16.0);
        let back = uncanonicalize(&sol, &canon, &net).unwrap();
        assert_eq!(back.flows["s0->j"], 10.0);
        assert_eq!(back.flows["s1->j"], 5.0);
        assert_eq!(back.flows.len(), 4);

        sol.flows.insert("mystery->j".into(), 1.0);
        assert!(matches!(uncanonicalize(&sol, &canon, &net), Err(Error::Corrupt(_))));
    }

    #[test]
    fn cyclic_input_is_rejected() {
        let mut net = fan_in(2);
        net.add_edge(Edge::new("j", "s0"));
        assert!(matches!(canonicalize(&net), Err(Error::Cyclic(_))));
    }
}

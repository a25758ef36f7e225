//! Index-based adjacency view of a [`Network`].

use std::collections::{BTreeMap, BinaryHeap};
use std::cmp::Reverse;

use crate::error::{Error, Result};
use crate::network::Network;

/// Dense indices for components with incidence lists of edge positions.
///
/// Components are indexed in id order; edges keep their position in
/// `Network::edges`. Edges with a missing endpoint are left out.
#[derive(Clone, Debug)]
pub struct Topology {
    ids: Vec<String>,
    index: BTreeMap<String, usize>,
    inbound: Vec<Vec<usize>>,
    outbound: Vec<Vec<usize>>,
    edge_ends: Vec<Option<(usize, usize)>>,
}

impl Topology {
    pub fn new(net: &Network) -> Self {
        let ids: Vec<String> = net.components.keys().cloned().collect();
        let index: BTreeMap<String, usize> = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        let mut inbound = vec![Vec::new(); ids.len()];
        let mut outbound = vec![Vec::new(); ids.len()];
        let mut edge_ends = Vec::with_capacity(net.edges.len());
        for (e, edge) in net.edges.iter().enumerate() {
            match (index.get(&edge.from), index.get(&edge.to)) {
                (Some(&a), Some(&b)) => {
                    outbound[a].push(e);
                    inbound[b].push(e);
                    edge_ends.push(Some((a, b)));
                }
                _ => edge_ends.push(None),
            }
        }
        Topology { ids, index, inbound, outbound, edge_ends }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, node: usize) -> &str {
        &self.ids[node]
    }

    pub fn node(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn inbound(&self, node: usize) -> &[usize] {
        &self.inbound[node]
    }

    pub fn outbound(&self, node: usize) -> &[usize] {
        &self.outbound[node]
    }

    pub fn ends(&self, edge: usize) -> Option<(usize, usize)> {
        self.edge_ends[edge]
    }

    /// Kahn's algorithm, always releasing the smallest ready index first so
    /// the order is deterministic. Fails with the id of a node on a cycle.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.ids.len();
        let mut indegree: Vec<usize> = self.inbound.iter().map(Vec::len).collect();
        let mut ready: BinaryHeap<Reverse<usize>> =
            (0..n).filter(|&v| indegree[v] == 0).map(Reverse).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(Reverse(v)) = ready.pop() {
            order.push(v);
            for &e in &self.outbound[v] {
                let (_, w) = self.edge_ends[e].expect("outbound edges are resolved");
                indegree[w] -= 1;
                if indegree[w] == 0 {
                    ready.push(Reverse(w));
                }
            }
        }
        if order.len() < n {
            let stuck = (0..n).find(|&v| indegree[v] > 0).expect("some node remains");
            return Err(Error::Cyclic(self.ids[stuck].clone()));
        }
        Ok(order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Component, ComponentTag, Edge};

    fn chain(ids: &[&str], edges: &[(&str, &str)]) -> Network {
        let mut net = Network::new();
        for id in ids {
            net.add_component(*id, Component::new(ComponentTag::Treatment));
        }
        for (a, b) in edges {
            net.add_edge(Edge::new(*a, *b));
        }
        net
    }

    #[test]
    fn orders_a_dag() {
        let net = chain(&["a", "b", "c"], &[("c", "b"), ("a", "c")]);
        let topo = Topology::new(&net);
        let order: Vec<&str> = topo.topological_order().unwrap().into_iter().map(|v| topo.id(v)).collect();
        assert_eq!(order, ["a", "c", "b"]);
    }

    #[test]
    fn reports_cycles() {
        let net = chain(&["a", "b"], &[("a", "b"), ("b", "a")]);
        assert!(matches!(Topology::new(&net).topological_order(), Err(Error::Cyclic(_))));
    }

    #[test]
    fn skips_dangling_edges() {
        let net = chain(&["a"], &[("a", "ghost")]);
        let topo = Topology::new(&net);
        assert_eq!(topo.ends(0), None);
        assert!(topo.outbound(0).is_empty());
    }
}

//! Direct evaluation of the nonlinear model on concrete flows.
//!
//! Concentrations are propagated through the network as flow-weighted means
//! instead of being read from the linearized model, so checking a solver
//! result here is independent of the discretization.

mod brute;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::milp::objective_terms;
use crate::network::{FlowReduction, Network, Objective, QualityReduction};
use crate::topology::Topology;

pub use brute::{brute_force, BruteForceError, BruteForceOptions, BruteForceResult};

/// Concentrations per component, then pollutant. Components without inflow
/// (other than providers) are absent.
pub type Concentrations = BTreeMap<String, BTreeMap<String, f64>>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckOptions {
    /// Absolute flow tolerance, m³/h.
    pub flow_tol: f64,
    /// Relative concentration tolerance.
    pub quality_tol: f64,
    /// Minimum flow of a used edge.
    pub mu: f64,
    pub exit_quality: bool,
    pub entry_limits: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { flow_tol: 1e-6, quality_tol: 1e-6, mu: crate::milp::DEFAULT_MU, exit_quality: true, entry_limits: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckViolation {
    pub constraint: String,
    pub element: String,
    pub lhs: f64,
    pub rhs: f64,
    /// How far the constraint is violated.
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<CheckViolation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective_value: Option<f64>,
    pub concentrations: Concentrations,
}

fn flow_vector(net: &Network, flows: &BTreeMap<String, f64>) -> Result<Vec<f64>> {
    if let Some(unknown) = flows.keys().find(|id| net.edge(id).is_none()) {
        return Err(Error::Corrupt(unknown.clone()));
    }
    Ok(net.edges.iter().map(|e| flows.get(&e.id()).copied().unwrap_or(0.0)).collect())
}

/// Exit concentrations implied by `flows`. An edge counts when its flow
/// exceeds `flow_tol`.
pub fn propagate_quality(net: &Network, flows: &BTreeMap<String, f64>) -> Result<Concentrations> {
    let x = flow_vector(net, flows)?;
    propagate(net, &x, CheckOptions::default().flow_tol).map(|(c, _)| c)
}

/// Returns concentrations and, per component, the inlet concentration of
/// each pollutant (for entry limits).
fn propagate(net: &Network, x: &[f64], tol: f64) -> Result<(Concentrations, Concentrations)> {
    let topo = Topology::new(net);
    let order = topo.topological_order()?;
    let pollutants: Vec<&str> = net.pollutant_ids().collect();
    let mut exit: Concentrations = BTreeMap::new();
    let mut entry: Concentrations = BTreeMap::new();
    for &v in &order {
        let id = topo.id(v);
        let attrs = &net.components[id].attrs;
        let ins = topo.inbound(v);
        if ins.is_empty() {
            let used = topo.outbound(v).iter().any(|&e| x[e] > tol);
            let mut values = BTreeMap::new();
            for p in &pollutants {
                match attrs.given_quality(p) {
                    Some(c) => {
                        values.insert(p.to_string(), c);
                    }
                    None if used => return Err(Error::MissingQuality { component: id.to_string(), pollutant: p.to_string() }),
                    None => {}
                }
            }
            if !values.is_empty() || pollutants.is_empty() {
                exit.insert(id.to_string(), values);
            }
            continue;
        }
        let active: Vec<usize> = ins.iter().copied().filter(|&e| x[e] > tol).collect();
        let total: f64 = active.iter().map(|&e| x[e]).sum();
        if active.is_empty() {
            continue;
        }
        let mut inlet = BTreeMap::new();
        let mut values = BTreeMap::new();
        for p in &pollutants {
            let mixed: f64 = active
                .iter()
                .map(|&e| {
                    let src = topo.id(topo.ends(e).expect("indexed edge").0);
                    x[e] * exit.get(src).and_then(|m| m.get(*p)).copied().unwrap_or(0.0)
                })
                .sum::<f64>()
                / total;
            inlet.insert(p.to_string(), mixed);
            let c = match attrs.quality_reduction(p) {
                QualityReduction::Fixed(rf) => rf,
                QualityReduction::Rate(rr) => rr * mixed,
            };
            values.insert(p.to_string(), c);
        }
        entry.insert(id.to_string(), inlet);
        exit.insert(id.to_string(), values);
    }
    Ok((exit, entry))
}

struct Collector<'a> {
    options: &'a CheckOptions,
    violations: Vec<CheckViolation>,
}

impl Collector<'_> {
    fn flow(&mut self, constraint: &str, element: &str, lhs: f64, rel: Rel, rhs: f64) {
        self.push(constraint, element, lhs, rel, rhs, self.options.flow_tol);
    }

    fn quality(&mut self, constraint: &str, element: &str, lhs: f64, rel: Rel, rhs: f64) {
        self.push(constraint, element, lhs, rel, rhs, self.options.quality_tol * rhs.abs().max(1.0));
    }

    fn push(&mut self, constraint: &str, element: &str, lhs: f64, rel: Rel, rhs: f64, tol: f64) {
        let slack = match rel {
            Rel::Le => lhs - rhs,
            Rel::Ge => rhs - lhs,
            Rel::Eq => (lhs - rhs).abs(),
        };
        if slack > tol {
            self.violations.push(CheckViolation { constraint: constraint.into(), element: element.into(), lhs, rhs, slack });
        }
    }
}

#[derive(Clone, Copy)]
enum Rel {
    Le,
    Ge,
    Eq,
}

/// Evaluates every flow and quality constraint on `flows`. The objective is
/// `objective` if given, else the network's own, else omitted.
pub fn check_feasibility(
    net: &Network,
    flows: &BTreeMap<String, f64>,
    objective: Option<&Objective>,
    options: &CheckOptions,
) -> Result<FeasibilityReport> {
    let x = flow_vector(net, flows)?;
    let (concentrations, entry) = propagate(net, &x, options.flow_tol)?;
    let topo = Topology::new(net);
    let mut out = Collector { options, violations: Vec::new() };

    for (e, edge) in net.edges.iter().enumerate() {
        let id = edge.id();
        out.flow("NonNegativeFlow", &id, x[e], Rel::Ge, 0.0);
        if let Some(cap) = edge.capacity {
            out.flow("EdgeCapacity", &id, x[e], Rel::Le, cap);
        }
        if x[e] > options.flow_tol {
            out.flow("EdgeActivationLower", &id, x[e], Rel::Ge, options.mu);
        }
    }

    for v in 0..topo.len() {
        let id = topo.id(v);
        let attrs = &net.components[id].attrs;
        let ins = topo.inbound(v);
        let outs = topo.outbound(v);
        let inflow: f64 = ins.iter().map(|&e| x[e]).sum();
        let outflow: f64 = outs.iter().map(|&e| x[e]).sum();
        if ins.is_empty() && !outs.is_empty() {
            if let Some(q) = attrs.supply.filter(|&q| q > 0.0) {
                out.flow("SupplyBalance", id, outflow, Rel::Eq, q);
            }
        }
        if outs.is_empty() && !ins.is_empty() {
            if let Some(d) = attrs.demand.filter(|&d| d > 0.0) {
                out.flow("DemandCover", id, inflow, Rel::Ge, d);
            }
        }
        if let Some(cap) = attrs.capacity {
            if !ins.is_empty() {
                out.flow("InletCapacity", id, inflow, Rel::Le, cap);
            }
            if !outs.is_empty() {
                out.flow("OutletCapacity", id, outflow, Rel::Le, cap);
            }
        }
        if !ins.is_empty() && !outs.is_empty() {
            match attrs.flow_reduction().unwrap_or(FlowReduction::Rate(1.0)) {
                FlowReduction::Rate(sr) => out.flow("FlowConservation", id, outflow, Rel::Eq, sr * inflow),
                FlowReduction::Fixed(sf) => {
                    let target = if inflow > options.flow_tol { sf } else { 0.0 };
                    out.flow("FixedOutlet", id, outflow, Rel::Eq, target);
                }
            }
        }
        let Some(inlet) = entry.get(id) else { continue };
        for (p, &c_in) in inlet {
            let element = format!("{id}/{p}");
            let (lower, upper) = attrs.quality_bounds(p);
            if options.entry_limits {
                if let Some(l) = lower {
                    out.quality("EntryLimitLower", &element, c_in, Rel::Ge, l);
                }
                if let Some(u) = upper {
                    out.quality("EntryLimitUpper", &element, c_in, Rel::Le, u);
                }
            }
            let c = concentrations[id][p];
            match attrs.quality_reduction(p) {
                QualityReduction::Rate(rr) if options.exit_quality => {
                    if let Some(l) = lower {
                        out.quality("ExitQualityLower", &element, c, Rel::Ge, rr * l);
                    }
                    if let Some(u) = upper {
                        out.quality("ExitQualityUpper", &element, c, Rel::Le, rr * u);
                    }
                }
                QualityReduction::Rate(_) => {}
                QualityReduction::Fixed(rf) => out.quality("FixedQuality", &element, c, Rel::Eq, rf),
            }
        }
    }

    let objective_value = match objective.or(net.objective.as_ref()) {
        Some(objective) => {
            let ends: Vec<Option<(String, String)>> = net.edges.iter().map(|e| Some((e.from.clone(), e.to.clone()))).collect();
            let terms = objective_terms(&net.components, &ends, objective)?;
            Some(terms.evaluate(&x, options.flow_tol))
        }
        None => None,
    };
    Ok(FeasibilityReport { feasible: out.violations.is_empty(), violations: out.violations, objective_value, concentrations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Component, ComponentTag, Edge, Pollutant};

    fn flows(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn source(net: &mut Network, id: &str, c: f64) {
        net.add_component(id, Component::new(ComponentTag::WastewaterSource)).quality_mut("COD").given = Some(c);
    }

    #[test]
    fn chain_applies_reduction_rate() {
        let mut net = Network::new().with_pollutant(Pollutant::new("COD", "mg/L"));
        source(&mut net, "S", 50.0);
        net.add_component("T", Component::new(ComponentTag::Treatment)).quality_mut("COD").rr = Some(0.6);
        net.add_edge(Edge::new("S", "T"));
        let c = propagate_quality(&net, &flows(&[("S->T", 1.0)])).unwrap();
        assert!((c["T"]["COD"] - 30.0).abs() < 1e-12);
    }

    #[test]
    fn blend_takes_weighted_mean() {
        let mut net = Network::new().with_pollutant(Pollutant::new("COD", "mg/L"));
        source(&mut net, "A", 8.0);
        source(&mut net, "B", 4.0);
        net.add_component("M", Component::new(ComponentTag::Tank));
        net.add_edge(Edge::new("A", "M"));
        net.add_edge(Edge::new("B", "M"));
        let c = propagate_quality(&net, &flows(&[("A->M", 10.0), ("B->M", 30.0)])).unwrap();
        let expected = (10.0 * 8.0 + 30.0 * 4.0) / 40.0;
        assert!((c["M"]["COD"] - expected).abs() < 1e-12);
        assert_eq!(expected, 5.0);
    }

    #[test]
    fn fixed_exit_ignores_inlet() {
        let mut net = Network::new().with_pollutant(Pollutant::new("COD", "mg/L"));
        source(&mut net, "S", 50.0);
        net.add_component("T", Component::new(ComponentTag::Treatment)).quality_mut("COD").rf = Some(2.0);
        net.add_edge(Edge::new("S", "T"));
        let c = propagate_quality(&net, &flows(&[("S->T", 3.0)])).unwrap();
        assert_eq!(c["T"]["COD"], 2.0);
        let idle = propagate_quality(&net, &flows(&[])).unwrap();
        assert!(!idle.contains_key("T"));
    }

    #[test]
    fn missing_source_quality_is_reported() {
        let mut net = Network::new().with_pollutant(Pollutant::new("COD", "mg/L"));
        net.add_component("S", Component::new(ComponentTag::WastewaterSource));
        net.add_component("D", Component::new(ComponentTag::Discharge));
        net.add_edge(Edge::new("S", "D"));
        assert!(matches!(propagate_quality(&net, &flows(&[("S->D", 1.0)])), Err(Error::MissingQuality { .. })));
    }

    #[test]
    fn zero_flows_without_requirements_are_feasible() {
        let mut net = Network::new();
        net.add_component("S", Component::new(ComponentTag::FreshWaterSource));
        net.add_component("A", Component::new(ComponentTag::Application));
        net.add_edge(Edge::new("S", "A"));
        let report = check_feasibility(&net, &flows(&[]), None, &CheckOptions::default()).unwrap();
        assert!(report.feasible);
    }

    #[test]
    fn supply_shortfall_is_a_violation() {
        let mut net = Network::new();
        net.add_component("S", Component::new(ComponentTag::WastewaterSource)).supply = Some(100.0);
        net.add_component("D", Component::new(ComponentTag::Discharge));
        net.add_edge(Edge::new("S", "D"));
        let report = check_feasibility(&net, &flows(&[("S->D", 90.0)]), None, &CheckOptions::default()).unwrap();
        assert!(!report.feasible);
        assert_eq!(report.violations[0].constraint, "SupplyBalance");
        assert!((report.violations[0].slack - 10.0).abs() < 1e-12);
    }

    #[test]
    fn entry_limit_on_blend() {
        let mut net = Network::new().with_pollutant(Pollutant::new("COD", "mg/L"));
        source(&mut net, "A", 8.0);
        source(&mut net, "B", 4.0);
        net.add_component("M", Component::new(ComponentTag::Application)).quality_mut("COD").upper = Some(5.0);
        net.add_edge(Edge::new("A", "M"));
        net.add_edge(Edge::new("B", "M"));
        let ok = check_feasibility(&net, &flows(&[("A->M", 10.0), ("B->M", 30.0)]), None, &CheckOptions::default()).unwrap();
        assert!(ok.feasible, "{:?}", ok.violations);
        let bad = check_feasibility(&net, &flows(&[("A->M", 20.0), ("B->M", 20.0)]), None, &CheckOptions::default()).unwrap();
        assert!(bad.violations.iter().any(|v| v.constraint == "EntryLimitUpper"));
    }

    #[test]
    fn concentrations_are_scale_free() {
        let mut net = Network::new().with_pollutant(Pollutant::new("COD", "mg/L"));
        source(&mut net, "A", 8.0);
        source(&mut net, "B", 4.0);
        net.add_component("M", Component::new(ComponentTag::Tank)).quality_mut("COD").rr = Some(0.5);
        net.add_edge(Edge::new("A", "M"));
        net.add_edge(Edge::new("B", "M"));
        let a = propagate_quality(&net, &flows(&[("A->M", 1.0), ("B->M", 3.0)])).unwrap();
        let b = propagate_quality(&net, &flows(&[("A->M", 7.0), ("B->M", 21.0)])).unwrap();
        assert!((a["M"]["COD"] - b["M"]["COD"]).abs() < 1e-12);
    }
}

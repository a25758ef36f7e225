//! Flow aggregates used to compare network variants.
//!
//! Each stream carries the fraction φ of its water that has passed a
//! treatment since it last left a source or an application: sources and
//! applications emit φ = 0, treatments emit φ = 1 and every other component
//! passes on the flow-weighted mean of its inflows. Water treated counts
//! only the untreated part of treatment inflow, `in·(1 − φ)`, so a stream
//! treated twice is not counted twice; discharged and reused amounts are
//! φ-weighted. With these definitions treated water balances exactly into
//! discharged, reused, other received water and losses.

use serde::{Deserialize, Serialize};

use crate::network::{ComponentTag, Network};
use crate::solution::Solution;
use crate::topology::Topology;

/// Treated-water balance of one solved instance, m³/h.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialFlows {
    pub treated: f64,
    pub discharged: f64,
    pub reused: f64,
    /// Treated water ending in receivers that are neither discharges nor applications.
    pub other_received: f64,
    pub losses: f64,
    pub freshwater_intake: f64,
    pub total_intake: f64,
}

/// Balance of `solution` on `net`; `None` when it carries no flows.
pub fn trial_flows(net: &Network, solution: &Solution) -> Option<TrialFlows> {
    if !solution.has_flows() {
        return None;
    }
    let topo = Topology::new(net);
    let order = topo.topological_order().ok()?;
    let x: Vec<f64> = net.edges.iter().map(|e| solution.flows.get(&e.id()).copied().unwrap_or(0.0)).collect();
    let mut phi_out = vec![0.0; topo.len()];
    let mut t = TrialFlows::default();
    for &v in &order {
        let tag = net.components[topo.id(v)].tag;
        let ins = topo.inbound(v);
        let outs = topo.outbound(v);
        let inflow: f64 = ins.iter().map(|&e| x[e]).sum();
        let outflow: f64 = outs.iter().map(|&e| x[e]).sum();
        let treated_in: f64 = ins.iter().map(|&e| x[e] * phi_out[topo.ends(e).expect("indexed edge").0]).sum();
        let phi_in = if inflow > 0.0 { treated_in / inflow } else { 0.0 };
        if ins.is_empty() {
            t.total_intake += outflow;
            if tag == ComponentTag::FreshWaterSource {
                t.freshwater_intake += outflow;
            }
            continue;
        }
        match tag {
            ComponentTag::Treatment => {
                t.treated += inflow - treated_in;
                if !outs.is_empty() {
                    t.losses += inflow - outflow;
                }
                phi_out[v] = 1.0;
            }
            ComponentTag::Application => {
                t.reused += treated_in;
                phi_out[v] = 0.0;
            }
            ComponentTag::Discharge => t.discharged += treated_in,
            _ if outs.is_empty() => t.other_received += treated_in,
            _ => {
                t.losses += phi_in * (inflow - outflow);
                phi_out[v] = phi_in;
            }
        }
        if tag == ComponentTag::Treatment && outs.is_empty() {
            t.other_received += inflow;
        }
    }
    Some(t)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KpiReport {
    pub trials: usize,
    /// Trials with a flow assignment.
    pub solved: usize,
    /// Solved trials in which any wastewater was treated.
    pub feasibility_count: usize,
    /// Mean over solved trials, m³/h.
    pub avg_wastewater_treated: f64,
    /// Shares of all treated water, in percent.
    pub discharged_pct: f64,
    pub reused_pct: f64,
    pub losses_pct: f64,
    pub avg_freshwater_intake: f64,
    pub avg_total_intake: f64,
    /// Set when nothing was treated and the percentages are reported as 0.
    pub no_treatment: bool,
}

impl KpiReport {
    pub fn aggregate(trials: &[Option<TrialFlows>]) -> Self {
        let solved: Vec<&TrialFlows> = trials.iter().flatten().collect();
        let n = solved.len();
        let sum = |f: fn(&TrialFlows) -> f64| solved.iter().map(|t| f(t)).sum::<f64>();
        let mean = |total: f64| if n == 0 { 0.0 } else { total / n as f64 };
        let treated = sum(|t| t.treated);
        let no_treatment = treated <= 1e-12;
        let pct = |part: f64| if no_treatment { 0.0 } else { 100.0 * part / treated };
        KpiReport {
            trials: trials.len(),
            solved: n,
            feasibility_count: solved.iter().filter(|t| t.treated > 1e-9).count(),
            avg_wastewater_treated: mean(treated),
            discharged_pct: pct(sum(|t| t.discharged)),
            reused_pct: pct(sum(|t| t.reused)),
            losses_pct: pct(sum(|t| t.losses)),
            avg_freshwater_intake: mean(sum(|t| t.freshwater_intake)),
            avg_total_intake: mean(sum(|t| t.total_intake)),
            no_treatment,
        }
    }
}

pub fn compute_kpis(net: &Network, solutions: &[Solution]) -> KpiReport {
    let flows: Vec<Option<TrialFlows>> = solutions.iter().map(|s| trial_flows(net, s)).collect();
    KpiReport::aggregate(&flows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Component, Edge};
    use crate::solution::SolveStatus;

    fn solution(flows: &[(&str, f64)]) -> Solution {
        let mut s = Solution::empty(SolveStatus::Optimal);
        s.flows = flows.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        s
    }

    fn chain(sink: ComponentTag, sr: f64) -> Network {
        let mut net = Network::new();
        net.add_component("S", Component::new(ComponentTag::WastewaterSource));
        net.add_component("T", Component::new(ComponentTag::Treatment)).sr = Some(sr);
        net.add_component("R", Component::new(sink));
        net.add_edge(Edge::new("S", "T"));
        net.add_edge(Edge::new("T", "R"));
        net
    }

    #[test]
    fn lossless_discharge() {
        let net = chain(ComponentTag::Discharge, 1.0);
        let k = compute_kpis(&net, &[solution(&[("S->T", 10.0), ("T->R", 10.0)])]);
        assert_eq!((k.discharged_pct, k.losses_pct, k.reused_pct), (100.0, 0.0, 0.0));
        assert_eq!(k.feasibility_count, 1);
    }

    #[test]
    fn reuse_after_lossy_treatment() {
        let net = chain(ComponentTag::Application, 0.9);
        let k = compute_kpis(&net, &[solution(&[("S->T", 10.0), ("T->R", 9.0)])]);
        assert!((k.losses_pct - 10.0).abs() < 1e-9);
        assert!((k.reused_pct - 90.0).abs() < 1e-9);
    }

    #[test]
    fn untreated_runs_report_zero_with_flag() {
        let net = chain(ComponentTag::Discharge, 1.0);
        let k = compute_kpis(&net, &[solution(&[("S->T", 0.0)]), Solution::empty(SolveStatus::Infeasible)]);
        assert!(k.no_treatment);
        assert_eq!(k.feasibility_count, 0);
        assert_eq!(k.solved, 1);
        assert_eq!(k.discharged_pct, 0.0);
    }

    #[test]
    fn second_treatment_is_not_double_counted() {
        let mut net = chain(ComponentTag::Treatment, 0.8);
        net.components.get_mut("R").unwrap().attrs.sr = Some(0.5);
        net.add_component("D", Component::new(ComponentTag::Discharge));
        net.add_edge(Edge::new("R", "D"));
        let t = trial_flows(&net, &solution(&[("S->T", 10.0), ("T->R", 8.0), ("R->D", 4.0)])).unwrap();
        assert_eq!(t.treated, 10.0);
        assert!((t.losses - 6.0).abs() < 1e-12);
        assert!((t.discharged + t.losses - t.treated).abs() < 1e-12);
    }
}

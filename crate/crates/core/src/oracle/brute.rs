//! Grid search over edge flows for tiny networks.
//!
//! Components are visited in topological order. A component whose total
//! outflow is determined (fixed supply, SR/SF of its inflow) spreads it over
//! its out-edges: all but the last edge take grid values and the last takes
//! the remainder. Providers without a fixed supply choose every out-edge
//! flow freely on the grid. Inlet capacities, demands and entry limits prune
//! partial assignments; complete ones go through [`check_feasibility`].

use std::collections::BTreeMap;

use thiserror::Error;

use super::{check_feasibility, CheckOptions};
use crate::milp::objective_terms;
use crate::network::{FlowReduction, Network, Objective, QualityReduction};
use crate::topology::Topology;

#[derive(Debug, Error)]
pub enum BruteForceError {
    #[error("grid has an estimated {estimate:.3e} points, above the limit of {limit:.0e}")]
    ExplosionGuard { estimate: f64, limit: f64 },
    #[error("edge `{0}` has no finite bound; set a flow bound")]
    Unbounded(String),
    #[error(transparent)]
    Model(#[from] crate::error::Error),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BruteForceOptions {
    pub grid_step: f64,
    /// Bound for edges without any capacity or supply limit.
    pub flow_bound: Option<f64>,
    pub max_points: f64,
    pub check: CheckOptions,
}

impl BruteForceOptions {
    pub fn with_step(grid_step: f64) -> Self {
        BruteForceOptions { grid_step, flow_bound: None, max_points: 1e8, check: CheckOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BruteForceResult {
    /// Best objective and its flows; `None` when no grid point is feasible.
    pub best: Option<(f64, BTreeMap<String, f64>)>,
    /// Complete assignments handed to the checker.
    pub evaluated: usize,
}

struct Grid<'a> {
    net: &'a Network,
    topo: Topology,
    order: Vec<usize>,
    bound: Vec<f64>,
    options: BruteForceOptions,
    objective: &'a Objective,
    pollutants: Vec<String>,
    x: Vec<f64>,
    /// Exit concentrations of visited active components (None = inactive).
    exit: Vec<Option<Vec<f64>>>,
    best: Option<(f64, Vec<f64>)>,
    evaluated: usize,
    error: Option<crate::error::Error>,
}

/// Grid values in `[0, hi]`, including `hi` itself.
fn grid(step: f64, hi: f64) -> Vec<f64> {
    let mut values = Vec::new();
    let mut i = 0u64;
    loop {
        let v = i as f64 * step;
        if v > hi + 1e-12 {
            break;
        }
        values.push(v.min(hi));
        i += 1;
    }
    if values.last().is_none_or(|&last| hi - last > 1e-12) {
        values.push(hi);
    }
    values
}

impl Grid<'_> {
    fn visit(&mut self, depth: usize) {
        if self.error.is_some() {
            return;
        }
        if depth == self.order.len() {
            self.evaluate();
            return;
        }
        let v = self.order[depth];
        let attrs = &self.net.components[self.topo.id(v)].attrs;
        let ins = self.topo.inbound(v).to_vec();
        let outs = self.topo.outbound(v).to_vec();
        let tol = self.options.check.flow_tol;
        let inflow: f64 = ins.iter().map(|&e| self.x[e]).sum();

        if !ins.is_empty() {
            if attrs.capacity.is_some_and(|c| inflow > c + tol) {
                return;
            }
            if outs.is_empty() && attrs.demand.is_some_and(|d| inflow < d - tol) {
                return;
            }
            if inflow > tol {
                let Some(c) = self.node_quality(v, &ins) else { return };
                self.exit[v] = Some(c);
            } else {
                self.exit[v] = None;
            }
        }
        if outs.is_empty() {
            self.visit(depth + 1);
            return;
        }
        let total = if ins.is_empty() {
            attrs.supply.filter(|&q| q > 0.0)
        } else {
            Some(match attrs.flow_reduction().unwrap_or(FlowReduction::Rate(1.0)) {
                FlowReduction::Rate(sr) => sr * inflow,
                FlowReduction::Fixed(sf) if inflow > tol => sf,
                FlowReduction::Fixed(_) => 0.0,
            })
        };
        match total {
            Some(total) => self.spread(depth, &outs, 0, total),
            None => self.free(depth, &outs, 0),
        }
    }

    fn spread(&mut self, depth: usize, outs: &[usize], i: usize, remaining: f64) {
        let e = outs[i];
        if i + 1 == outs.len() {
            let r = if remaining.abs() < 1e-12 { 0.0 } else { remaining };
            if r > self.bound[e] + self.options.check.flow_tol {
                return;
            }
            self.x[e] = r;
            self.visit(depth + 1);
            return;
        }
        for v in grid(self.options.grid_step, self.bound[e].min(remaining)) {
            self.x[e] = v;
            self.spread(depth, outs, i + 1, remaining - v);
        }
    }

    fn free(&mut self, depth: usize, outs: &[usize], i: usize) {
        if i == outs.len() {
            self.visit(depth + 1);
            return;
        }
        let e = outs[i];
        for v in grid(self.options.grid_step, self.bound[e]) {
            self.x[e] = v;
            self.free(depth, outs, i + 1);
        }
    }

    /// Exit concentrations of an active component, or None when its entry
    /// limits are violated.
    fn node_quality(&self, v: usize, ins: &[usize]) -> Option<Vec<f64>> {
        let attrs = &self.net.components[self.topo.id(v)].attrs;
        let tol = self.options.check.flow_tol;
        let total: f64 = ins.iter().filter(|&&e| self.x[e] > tol).map(|&e| self.x[e]).sum();
        let mut out = Vec::with_capacity(self.pollutants.len());
        for (pi, p) in self.pollutants.iter().enumerate() {
            let mut mixed = 0.0;
            for &e in ins {
                if self.x[e] > tol {
                    let src = self.topo.ends(e).expect("indexed edge").0;
                    mixed += self.x[e] * self.exit[src].as_ref().map_or(0.0, |c| c[pi]);
                }
            }
            mixed /= total;
            let (lower, upper) = attrs.quality_bounds(p);
            let qtol = self.options.check.quality_tol;
            if self.options.check.entry_limits {
                if lower.is_some_and(|l| mixed < l - qtol * l.abs().max(1.0)) || upper.is_some_and(|u| mixed > u + qtol * u.abs().max(1.0)) {
                    return None;
                }
            }
            out.push(match attrs.quality_reduction(p) {
                QualityReduction::Fixed(rf) => rf,
                QualityReduction::Rate(rr) => rr * mixed,
            });
        }
        Some(out)
    }

    fn evaluate(&mut self) {
        self.evaluated += 1;
        let flows: BTreeMap<String, f64> = self.net.edges.iter().zip(&self.x).map(|(e, &v)| (e.id(), v)).collect();
        let report = match check_feasibility(self.net, &flows, Some(self.objective), &self.options.check) {
            Ok(report) => report,
            Err(e) => {
                self.error = Some(e);
                return;
            }
        };
        if !report.feasible {
            return;
        }
        let value = report.objective_value.expect("objective given");
        let better = match &self.best {
            None => true,
            Some((best, flows)) => {
                if self.objective.sense.improves(value, *best, 1e-9) {
                    true
                } else if (value - best).abs() <= 1e-9 {
                    // Ties go to the lexicographically smallest flow vector.
                    self.x.iter().zip(flows).find(|(a, b)| a != b).is_some_and(|(a, b)| a < b)
                } else {
                    false
                }
            }
        };
        if better {
            self.best = Some((value, self.x.clone()));
        }
    }
}

/// Exhaustive grid search for the best feasible flow assignment.
pub fn brute_force(net: &Network, objective: &Objective, options: &BruteForceOptions) -> Result<BruteForceResult, BruteForceError> {
    let topo = Topology::new(net);
    let order = topo.topological_order()?;
    let ends: Vec<Option<(String, String)>> = net.edges.iter().map(|e| Some((e.from.clone(), e.to.clone()))).collect();
    objective_terms(&net.components, &ends, objective)?;

    let mut bound = Vec::with_capacity(net.edges.len());
    for edge in &net.edges {
        let from = &net.components[&edge.from].attrs;
        let to = &net.components[&edge.to].attrs;
        let from_is_provider = net.in_edges(&edge.from).next().is_none();
        let candidates = [
            edge.capacity,
            from.capacity,
            to.capacity,
            if from_is_provider { from.supply } else { None },
            options.flow_bound,
        ];
        bound.push(candidates.into_iter().flatten().fold(f64::INFINITY, f64::min));
    }
    // Downstream edges are also limited by what can reach them.
    for &v in &order {
        let ins = topo.inbound(v);
        if ins.is_empty() {
            continue;
        }
        let attrs = &net.components[topo.id(v)].attrs;
        let inflow: f64 = ins.iter().map(|&e| bound[e]).sum::<f64>().min(attrs.capacity.unwrap_or(f64::INFINITY));
        let outflow = match attrs.flow_reduction().unwrap_or(FlowReduction::Rate(1.0)) {
            FlowReduction::Rate(sr) => sr * inflow,
            FlowReduction::Fixed(sf) => sf,
        };
        for &e in topo.outbound(v) {
            bound[e] = bound[e].min(outflow);
        }
    }
    if let Some(e) = bound.iter().position(|b| !b.is_finite()) {
        return Err(BruteForceError::Unbounded(net.edges[e].id()));
    }

    // Every edge except the last out-edge of a determined component is a choice.
    let mut estimate = 1.0f64;
    for &v in &order {
        let outs = topo.outbound(v);
        if outs.is_empty() {
            continue;
        }
        let determined = !topo.inbound(v).is_empty() || net.components[topo.id(v)].attrs.supply.is_some_and(|q| q > 0.0);
        let choices = if determined { &outs[..outs.len() - 1] } else { outs };
        for &e in choices {
            estimate *= (bound[e] / options.grid_step).floor() + 2.0;
        }
    }
    if estimate > options.max_points {
        return Err(BruteForceError::ExplosionGuard { estimate, limit: options.max_points });
    }

    let n = topo.len();
    let mut search = Grid {
        net,
        topo,
        order,
        bound,
        options: *options,
        objective,
        pollutants: net.pollutant_ids().map(str::to_string).collect(),
        x: vec![0.0; net.edges.len()],
        exit: vec![None; n],
        best: None,
        evaluated: 0,
        error: None,
    };
    for v in 0..n {
        if search.topo.inbound(v).is_empty() {
            let attrs = &net.components[search.topo.id(v)].attrs;
            search.exit[v] = Some(search.pollutants.iter().map(|p| attrs.given_quality(p).unwrap_or(0.0)).collect());
        }
    }
    search.visit(0);
    if let Some(e) = search.error {
        return Err(e.into());
    }
    let best = search.best.map(|(value, x)| (value, net.edges.iter().zip(x).map(|(e, v)| (e.id(), v)).collect()));
    Ok(BruteForceResult { best, evaluated: search.evaluated })
}

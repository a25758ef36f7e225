//! The single optimization path shared by the CLI, the service and the
//! scenario runner: validate, split blending points, build, solve, and map
//! the result back onto the caller's network.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::milp::{build, BuildOptions, MilpModel, VarRole};
use crate::network::Network;
use crate::oracle::{check_feasibility, CheckOptions, FeasibilityReport};
use crate::preprocess::{canonicalize, uncanonicalize, CanonicalNetwork};
use crate::solution::{BlendShare, Solution};
use crate::solver::{solve, Backend, MilpSolution, SolveLimits};
use crate::validate::validate;

/// Flows below this are reported as exactly zero.
const FLOW_SNAP: f64 = 1e-9;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeRequest {
    pub build: BuildOptions,
    pub limits: SolveLimits,
    pub backend: Backend,
}

/// Validates `net` and builds its model.
pub fn prepare(net: &Network, options: &BuildOptions) -> Result<(CanonicalNetwork, MilpModel)> {
    let report = validate(net);
    if !report.is_valid() {
        return Err(Error::Invalid(report));
    }
    let canonical = canonicalize(net)?;
    let model = build(&canonical, options)?;
    Ok((canonical, model))
}

pub fn optimize(net: &Network, request: &OptimizeRequest) -> Result<Solution> {
    if !request.limits.is_valid() {
        return Err(Error::InvalidLimits);
    }
    let (canonical, model) = prepare(net, &request.build)?;
    let raw = solve(&model, &request.limits, request.backend)?;
    let solution = extract_solution(&model, &canonical, &raw);
    uncanonicalize(&solution, &canonical, net)
}

/// Reads network quantities off the model variables. Concentrations are
/// kept for providers and for components that receive flow.
pub fn extract_solution(model: &MilpModel, canonical: &CanonicalNetwork, raw: &MilpSolution) -> Solution {
    let mut solution = Solution::empty(raw.status);
    solution.objective_value = raw.objective;
    solution.gap = raw.gap;
    solution.solve_time = raw.solve_time;
    if raw.values.is_empty() {
        return solution;
    }
    let net = &canonical.network;
    let value = |v: usize| raw.values[v];
    for (v, var) in model.vars.iter().enumerate() {
        match &var.role {
            VarRole::Flow { edge } => {
                let x = if value(v).abs() < FLOW_SNAP { 0.0 } else { value(v) };
                solution.flows.insert(edge.clone(), x);
            }
            VarRole::Active { edge } => {
                solution.active.insert(edge.clone(), value(v) > 0.5);
            }
            _ => {}
        }
    }
    let mut inflow: BTreeMap<&str, f64> = BTreeMap::new();
    for edge in &net.edges {
        *inflow.entry(edge.to.as_str()).or_default() += solution.flows.get(&edge.id()).copied().unwrap_or(0.0);
    }
    let receives = |component: &str| inflow.get(component).is_some_and(|&f| f > 0.0);
    let is_provider = |component: &str| !inflow.contains_key(component);

    for (v, var) in model.vars.iter().enumerate() {
        match &var.role {
            VarRole::Quality { component, pollutant } if is_provider(component) || receives(component) => {
                solution.concentrations.entry(component.clone()).or_default().insert(pollutant.clone(), value(v));
            }
            VarRole::BlendPart { component, parts } if value(v) > 0.5 && receives(component) => {
                let group = model.blends.iter().find(|b| &b.component == component);
                if let Some(VarRole::Flow { edge }) = group.map(|g| &model.vars[g.first_flow].role) {
                    solution.blends.insert(component.clone(), BlendShare { first_edge: edge.clone(), parts: *parts, of: model.discretization });
                }
            }
            _ => {}
        }
    }
    solution
}

/// Checks a solution's flows against the network.
pub fn check(net: &Network, solution: &Solution, options: &CheckOptions) -> Result<FeasibilityReport> {
    check_feasibility(net, &solution.flows, None, options)
}

/// Check options matching the model built with `options`.
pub fn check_options_for(options: &BuildOptions) -> CheckOptions {
    CheckOptions { mu: options.mu, exit_quality: options.exit_quality, entry_limits: options.entry_limits, ..CheckOptions::default() }
}

//! Design-phase trials: sample uncertain parameters, optimize each sampled
//! instance, and tally which design options the optimum uses.
//!
//! Every random draw comes from its own ChaCha8 stream seeded by hashing
//! the run seed, the trial index and the identity of the attribute being
//! drawn, so results do not depend on scheduling or worker count, and two
//! networks sharing an attribute see the same draw for it.

mod kpi;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::engine::{optimize, OptimizeRequest};
use crate::milp::{BuildOptions, ConflictMode, ConflictSet, ResolvedOption, DEFAULT_DISCRETIZATION};
use crate::network::{Network, Objective};
use crate::solution::{SolveStatus, Solution};
use crate::solver::{Backend, SolveLimits};
use crate::validate::validate;

pub use crate::milp::resolve_options;
pub use kpi::{compute_kpis, trial_flows, KpiReport, TrialFlows};

/// Draws before giving up on producing a valid instance.
pub const MAX_RESAMPLES: u32 = 100;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("`{target}` has no attribute `{attribute}`")]
    UnknownAttribute { target: String, attribute: String },
    #[error("range for `{target}.{attribute}` has lower > upper or non-finite ends")]
    InvalidRange { target: String, attribute: String },
    #[error("no valid instance after {MAX_RESAMPLES} draws for trial {trial}: {report}")]
    ResampleExhausted { trial: usize, report: String },
    #[error("invalid trial configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Model(#[from] crate::error::Error),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Distribution {
    #[default]
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Crisp(f64),
    Range {
        lower: f64,
        upper: f64,
        #[serde(default)]
        distribution: Distribution,
    },
}

/// Sets `attribute` of the component or edge `target`. Attribute paths are
/// component fields (`supply`, `sr`, ...), `quality.<pollutant>.<field>`,
/// or `capacity` for edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSpec {
    pub target: String,
    pub attribute: String,
    pub value: ParamValue,
}

impl ParameterSpec {
    pub fn crisp(target: impl Into<String>, attribute: impl Into<String>, value: f64) -> Self {
        ParameterSpec { target: target.into(), attribute: attribute.into(), value: ParamValue::Crisp(value) }
    }

    pub fn uniform(target: impl Into<String>, attribute: impl Into<String>, lower: f64, upper: f64) -> Self {
        ParameterSpec {
            target: target.into(),
            attribute: attribute.into(),
            value: ParamValue::Range { lower, upper, distribution: Distribution::Uniform },
        }
    }
}

fn attribute_slot<'a>(net: &'a mut Network, target: &str, attribute: &str) -> Option<&'a mut Option<f64>> {
    if net.components.contains_key(target) {
        let a = &mut net.components.get_mut(target).expect("checked above").attrs;
        let parts: Vec<&str> = attribute.split('.').collect();
        return match parts.as_slice() {
            ["capacity"] => Some(&mut a.capacity),
            ["supply"] => Some(&mut a.supply),
            ["demand"] => Some(&mut a.demand),
            ["sr"] => Some(&mut a.sr),
            ["sf"] => Some(&mut a.sf),
            ["fixed_cost"] => Some(&mut a.fixed_cost),
            ["variable_cost"] => Some(&mut a.variable_cost),
            ["fixed_energy"] => Some(&mut a.fixed_energy),
            ["variable_energy"] => Some(&mut a.variable_energy),
            ["quality", p, field] => {
                let q = a.quality.get_mut(*p)?;
                match *field {
                    "rr" => Some(&mut q.rr),
                    "rf" => Some(&mut q.rf),
                    "lower" => Some(&mut q.lower),
                    "upper" => Some(&mut q.upper),
                    "given" => Some(&mut q.given),
                    _ => None,
                }
            }
            _ => None,
        };
    }
    let index = net.edge_index(target)?;
    match attribute {
        "capacity" => Some(&mut net.edges[index].capacity),
        _ => None,
    }
}

/// Whether `net` has the attribute a spec targets. Quality entries must
/// already exist for the pollutant.
pub fn has_attribute(net: &Network, target: &str, attribute: &str) -> bool {
    attribute_slot(&mut net.clone(), target, attribute).is_some()
}

/// The random stream for one draw of one attribute in one trial.
pub fn substream(seed: u64, trial: usize, target: &str, attribute: &str, attempt: u32) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((trial as u64).to_le_bytes());
    hasher.update(target.as_bytes());
    hasher.update([0]);
    hasher.update(attribute.as_bytes());
    hasher.update([0]);
    hasher.update(attempt.to_le_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

fn draw(spec: &ParameterSpec, seed: u64, trial: usize, attempt: u32) -> Result<f64, ScenarioError> {
    match spec.value {
        ParamValue::Crisp(v) => Ok(v),
        ParamValue::Range { lower, upper, distribution: Distribution::Uniform } => {
            if !(lower.is_finite() && upper.is_finite() && lower <= upper) {
                return Err(ScenarioError::InvalidRange { target: spec.target.clone(), attribute: spec.attribute.clone() });
            }
            if lower == upper {
                return Ok(lower);
            }
            Ok(substream(seed, trial, &spec.target, &spec.attribute, attempt).random_range(lower..=upper))
        }
    }
}

/// One sampled instance of `base`. Specs whose target is missing are an
/// error unless `skip_missing` is set, in which case they are ignored.
pub fn sample_instance(base: &Network, specs: &[ParameterSpec], seed: u64, trial: usize, skip_missing: bool) -> Result<Network, ScenarioError> {
    let mut last_report = String::new();
    for attempt in 0..MAX_RESAMPLES {
        let mut net = base.clone();
        for spec in specs {
            let value = draw(spec, seed, trial, attempt)?;
            match attribute_slot(&mut net, &spec.target, &spec.attribute) {
                Some(slot) => *slot = Some(value),
                None if skip_missing => log::debug!("skipping {}.{}: not present", spec.target, spec.attribute),
                None => return Err(ScenarioError::UnknownAttribute { target: spec.target.clone(), attribute: spec.attribute.clone() }),
            }
        }
        let report = validate(&net);
        if report.is_valid() {
            return Ok(net);
        }
        last_report = report.to_string();
    }
    Err(ScenarioError::ResampleExhausted { trial, report: last_report })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialConfig {
    pub specs: Vec<ParameterSpec>,
    pub n_trials: usize,
    pub seed: u64,
    /// Conflict sets of design options.
    #[serde(rename = "optionsCompared")]
    pub options_compared: Vec<ConflictSet>,
    pub conflict_mode: ConflictMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<Objective>,
    #[serde(rename = "K")]
    pub discretization: u32,
    pub limits: SolveLimits,
    pub backend: Backend,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            specs: Vec::new(),
            n_trials: 500,
            seed: 0,
            options_compared: Vec::new(),
            conflict_mode: ConflictMode::ExclusiveOptions,
            objective: None,
            discretization: DEFAULT_DISCRETIZATION,
            limits: SolveLimits::default(),
            backend: Backend::Exact,
        }
    }
}

impl TrialConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("config serialization is infallible");
        text.push('\n');
        text
    }

    pub fn request(&self) -> OptimizeRequest {
        OptimizeRequest {
            build: BuildOptions {
                discretization: self.discretization,
                objective: self.objective.clone(),
                conflicts: self.options_compared.clone(),
                conflict_mode: self.conflict_mode,
                ..BuildOptions::default()
            },
            limits: self.limits,
            backend: self.backend,
        }
    }

    fn check(&self) -> Result<(), ScenarioError> {
        if self.n_trials == 0 {
            return Err(ScenarioError::InvalidConfig("n_trials must be at least 1".into()));
        }
        let mut names = BTreeSet::new();
        for set in &self.options_compared {
            if !names.insert(&set.name) {
                return Err(ScenarioError::InvalidConfig(format!("conflict set `{}` is listed twice", set.name)));
            }
        }
        if !self.limits.is_valid() {
            return Err(ScenarioError::InvalidConfig("invalid solve limits".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrialStatus {
    Optimal,
    FeasibleWithinGap,
    Infeasible,
    TimedOut,
    Unbounded,
    Errored,
}

impl From<SolveStatus> for TrialStatus {
    fn from(status: SolveStatus) -> Self {
        match status {
            SolveStatus::Optimal => TrialStatus::Optimal,
            SolveStatus::FeasibleWithinGap => TrialStatus::FeasibleWithinGap,
            SolveStatus::Infeasible => TrialStatus::Infeasible,
            SolveStatus::TimedOut => TrialStatus::TimedOut,
            SolveStatus::Unbounded => TrialStatus::Unbounded,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    /// SHA-256 of the sampled instance's canonical form.
    pub digest: String,
    pub status: TrialStatus,
    pub options: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RuntimeStats {
    pub total: Duration,
    pub max_trial: Duration,
}

/// Tallies over all trials. `frequencies` counts each trial once under the
/// `+`-joined set of options it used, so that
/// `Σ frequencies + no_option + infeasible + errored = n_trials`;
/// `option_counts` counts options individually.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub n_trials: usize,
    pub seed: u64,
    pub frequencies: BTreeMap<String, usize>,
    pub option_counts: BTreeMap<String, usize>,
    /// Solved trials whose optimum uses no option edge.
    pub no_option: usize,
    pub infeasible: usize,
    /// Trials with an error or without any solution (time-outs included).
    pub errored: usize,
    pub per_trial: Vec<TrialRecord>,
    /// Wall-clock figures; not serialized so reruns compare byte for byte.
    #[serde(skip)]
    pub runtime: RuntimeStats,
}

impl TrialResult {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("result serialization is infallible");
        text.push('\n');
        text
    }
}

/// Options with at least one member edge carrying `mu` or more.
pub fn extract_options(solution: &Solution, options: &[ResolvedOption], mu: f64) -> BTreeSet<String> {
    options
        .iter()
        .filter(|o| o.edges.iter().any(|e| solution.flows.get(e).is_some_and(|&f| f >= mu)))
        .map(|o| o.name.clone())
        .collect()
}

pub fn digest(net: &Network) -> String {
    hex::encode(Sha256::digest(net.to_canonical_json().as_bytes()))
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, ScenarioError> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(|e| ScenarioError::Pool(e.to_string()))
}

/// Runs `config.n_trials` sampled optimizations on `jobs` worker threads.
pub fn run_trials(config: &TrialConfig, base: &Network, jobs: usize) -> Result<TrialResult, ScenarioError> {
    config.check()?;
    let request = config.request();
    let options = resolve_options(base, &config.options_compared)?;
    let mu = request.build.mu;
    let started = Instant::now();

    let trial = |index: usize| -> (TrialRecord, Duration) {
        let t0 = Instant::now();
        let record = match sample_instance(base, &config.specs, config.seed, index, false) {
            Err(e) => TrialRecord { index, digest: String::new(), status: TrialStatus::Errored, options: Vec::new(), objective: None, error: Some(e.to_string()) },
            Ok(net) => {
                let digest = digest(&net);
                match optimize(&net, &request) {
                    Ok(solution) => {
                        let used = if solution.has_flows() { extract_options(&solution, &options, mu).into_iter().collect() } else { Vec::new() };
                        TrialRecord { index, digest, status: solution.status.into(), options: used, objective: solution.objective_value, error: None }
                    }
                    Err(e) => TrialRecord { index, digest, status: TrialStatus::Errored, options: Vec::new(), objective: None, error: Some(e.to_string()) },
                }
            }
        };
        (record, t0.elapsed())
    };
    let records: Vec<(TrialRecord, Duration)> = pool(jobs)?.install(|| (0..config.n_trials).into_par_iter().map(trial).collect());

    let mut result = TrialResult {
        n_trials: config.n_trials,
        seed: config.seed,
        frequencies: BTreeMap::new(),
        option_counts: options.iter().map(|o| (o.name.clone(), 0)).collect(),
        no_option: 0,
        infeasible: 0,
        errored: 0,
        per_trial: Vec::with_capacity(records.len()),
        runtime: RuntimeStats::default(),
    };
    for (record, elapsed) in records {
        result.runtime.max_trial = result.runtime.max_trial.max(elapsed);
        let solved = matches!(record.status, TrialStatus::Optimal | TrialStatus::FeasibleWithinGap)
            || (record.status == TrialStatus::TimedOut && record.objective.is_some());
        match record.status {
            TrialStatus::Infeasible => result.infeasible += 1,
            _ if !solved => result.errored += 1,
            _ if record.options.is_empty() => result.no_option += 1,
            _ => {
                *result.frequencies.entry(record.options.join("+")).or_default() += 1;
                for option in &record.options {
                    *result.option_counts.entry(option.clone()).or_default() += 1;
                }
            }
        }
        result.per_trial.push(record);
    }
    result.runtime.total = started.elapsed();
    Ok(result)
}

/// Per-trial outcome of a comparison run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTrial {
    pub index: usize,
    pub current: Option<TrialFlows>,
    pub updated: Option<TrialFlows>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub current: KpiReport,
    pub updated: KpiReport,
    pub per_trial: Vec<ComparisonTrial>,
}

impl Comparison {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("comparison serialization is infallible");
        text.push('\n');
        text
    }
}

/// Solves both networks on identical draws of every shared attribute and
/// aggregates KPIs for each. Specs targeting an attribute one network lacks
/// apply only to the other.
pub fn compare_networks(current: &Network, updated: &Network, config: &TrialConfig, jobs: usize) -> Result<Comparison, ScenarioError> {
    config.check()?;
    if current.pollutant_ids().collect::<Vec<_>>() != updated.pollutant_ids().collect::<Vec<_>>() {
        return Err(ScenarioError::InvalidConfig("networks declare different pollutants".into()));
    }
    for spec in &config.specs {
        if !has_attribute(current, &spec.target, &spec.attribute) && !has_attribute(updated, &spec.target, &spec.attribute) {
            return Err(ScenarioError::UnknownAttribute { target: spec.target.clone(), attribute: spec.attribute.clone() });
        }
    }
    let mut request = config.request();
    let solve_one = |base: &Network, index: usize, request: &OptimizeRequest| -> Option<(Network, Solution)> {
        let net = sample_instance(base, &config.specs, config.seed, index, true).ok()?;
        let solution = optimize(&net, request).ok()?;
        Some((net, solution))
    };
    // Conflict sets may name options of only one network.
    request.build.conflicts.clear();
    let trial = |index: usize| -> ComparisonTrial {
        let current = solve_one(current, index, &request).map(|(net, s)| trial_flows(&net, &s));
        let updated = solve_one(updated, index, &request).map(|(net, s)| trial_flows(&net, &s));
        ComparisonTrial { index, current: current.flatten(), updated: updated.flatten() }
    };
    let per_trial: Vec<ComparisonTrial> = pool(jobs)?.install(|| (0..config.n_trials).into_par_iter().map(trial).collect());
    let current_flows: Vec<Option<TrialFlows>> = per_trial.iter().map(|t| t.current.clone()).collect();
    let updated_flows: Vec<Option<TrialFlows>> = per_trial.iter().map(|t| t.updated.clone()).collect();
    Ok(Comparison { current: KpiReport::aggregate(&current_flows), updated: KpiReport::aggregate(&updated_flows), per_trial })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Component, ComponentTag, Edge, ObjectiveKind, Pollutant, Sense};

    fn net() -> Network {
        let mut net = Network::new().with_pollutant(Pollutant::new("COD", "mg/L"));
        let s = net.add_component("S", Component::new(ComponentTag::WastewaterSource));
        s.supply = Some(10.0);
        s.quality_mut("COD").given = Some(50.0);
        net.add_component("D", Component::new(ComponentTag::Discharge));
        net.add_edge(Edge::new("S", "D"));
        net
    }

    #[test]
    fn crisp_and_degenerate_ranges() {
        let specs = vec![ParameterSpec::crisp("S", "supply", 100.0), ParameterSpec::uniform("S", "quality.COD.given", 10.0, 10.0)];
        let sampled = sample_instance(&net(), &specs, 7, 0, false).unwrap();
        assert_eq!(sampled.components["S"].attrs.supply, Some(100.0));
        assert_eq!(sampled.components["S"].attrs.given_quality("COD"), Some(10.0));
    }

    #[test]
    fn uniform_mean() {
        let spec = ParameterSpec::uniform("S", "supply", 0.0, 1.0);
        let n = 10_000;
        let mean = (0..n).map(|t| draw(&spec, 42, t, 0).unwrap()).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.02, "{mean}");
    }

    #[test]
    fn draws_depend_only_on_identity() {
        let a = draw(&ParameterSpec::uniform("S", "supply", 0.0, 1.0), 1, 3, 0).unwrap();
        let b = draw(&ParameterSpec::uniform("S", "supply", 0.0, 1.0), 1, 3, 0).unwrap();
        let c = draw(&ParameterSpec::uniform("S", "supply", 0.0, 1.0), 1, 4, 0).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn unknown_attribute() {
        let specs = vec![ParameterSpec::crisp("S", "colour", 1.0)];
        assert!(matches!(sample_instance(&net(), &specs, 0, 0, false), Err(ScenarioError::UnknownAttribute { .. })));
        assert!(sample_instance(&net(), &specs, 0, 0, true).is_ok());
    }

    #[test]
    fn invalid_draws_exhaust_resampling() {
        let specs = vec![ParameterSpec::uniform("S", "supply", -2.0, -1.0)];
        assert!(matches!(sample_instance(&net(), &specs, 0, 0, false), Err(ScenarioError::ResampleExhausted { .. })));
    }

    #[test]
    fn forced_option() {
        let mut net = Network::new();
        net.add_component("S", Component::new(ComponentTag::WastewaterSource)).supply = Some(5.0);
        net.add_component("A", Component::new(ComponentTag::Treatment));
        net.add_component("B", Component::new(ComponentTag::Treatment));
        net.add_component("D", Component::new(ComponentTag::Discharge));
        net.add_edge(Edge::new("S", "A").with_capacity(0.0).with_option("A"));
        net.add_edge(Edge::new("S", "B").with_option("B"));
        net.add_edge(Edge::new("A", "D"));
        net.add_edge(Edge::new("B", "D"));
        net.objective = Some(Objective::new(ObjectiveKind::TotalFlow, Sense::Maximize, ["D"]));
        let config = TrialConfig { n_trials: 4, discretization: 4, specs: vec![ParameterSpec::uniform("S", "supply", 1.0, 5.0)], ..TrialConfig::default() };
        let result = run_trials(&config, &net, 2).unwrap();
        assert_eq!(result.frequencies, BTreeMap::from([("B".to_string(), 4)]));
        assert_eq!(result.option_counts["A"], 0);
    }
}

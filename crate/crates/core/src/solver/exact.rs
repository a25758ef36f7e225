//! Exact search over blend shares and edge-activity patterns.
//!
//! Blend groups are split into ranges of shares (the share suggested by the
//! current relaxation goes first), other binaries are fixed one at a time.
//! Every node tightens bounds by row activity, drops rows that can no longer
//! bind, and solves the remaining LP with the dense simplex; its value bounds
//! every assignment below it. A leaf with all binaries fixed is re-solved
//! with them pinned so big-M rows see exact 0/1 values.

use std::time::{Duration, Instant};

use super::simplex::{simplex_lp, LpOutcome, LpProblem};
use super::{MilpSolution, SolveError, SolveLimits};
use crate::milp::{ExitRule, MilpModel, Relation, RowTag, VarKind, VarRole};
use crate::solution::SolveStatus;

const INTEGRALITY_TOL: f64 = 1e-6;
const PROPAGATION_PASSES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactOptions {
    /// Nodes processed before giving up.
    pub max_nodes: usize,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions { max_nodes: 1 << 20 }
    }
}

pub fn solve_exact(model: &MilpModel, limits: &SolveLimits) -> Result<MilpSolution, SolveError> {
    solve_exact_with(model, limits, &ExactOptions::default())
}

/// A one-of-many binary group, ordered by share index.
struct Group {
    vars: Vec<usize>,
    /// First and second inflow variables when known, for share hints.
    flows: Option<(usize, usize)>,
}

struct Node {
    lo: Vec<f64>,
    hi: Vec<f64>,
    bound: f64,
}

/// A valid inequality derived for one node.
struct Cut {
    terms: Vec<(usize, f64)>,
    relation: Relation,
    rhs: f64,
}

enum NodeLp {
    Infeasible,
    Unbounded,
    Optimal { value: f64, x: Vec<f64> },
}

struct Search<'a> {
    model: &'a MilpModel,
    /// +1 to maximize, -1 to minimize; the search always maximizes `sign * objective`.
    sign: f64,
    objective: Vec<f64>,
    binaries: Vec<usize>,
    groups: Vec<Group>,
    /// Design-option binaries, branched on before anything else.
    options: Vec<usize>,
    /// Share binaries gating each row. A row gated by a share that is still
    /// open is left out of the node LP; the share-range cuts stand in for it.
    share_gates: Vec<Vec<usize>>,
    k_parts: f64,
}

impl<'a> Search<'a> {
    fn new(model: &'a MilpModel) -> Self {
        let sign = model.sense.sign();
        let mut objective = vec![0.0; model.vars.len()];
        for &(v, a) in &model.objective {
            objective[v] += sign * a;
        }
        let binaries = (0..model.vars.len()).filter(|&v| model.vars[v].kind == VarKind::Binary).collect();
        let groups = if model.blends.is_empty() {
            detect_groups(model)
        } else {
            model.blends.iter().map(|b| Group { vars: b.parts.clone(), flows: Some((b.first_flow, b.second_flow)) }).collect()
        };
        let options = (0..model.vars.len()).filter(|&v| matches!(model.vars[v].role, VarRole::Option { .. })).collect();
        let share_gates = model
            .rows
            .iter()
            .map(|row| {
                if !is_share_gated(row.tag) {
                    return Vec::new();
                }
                row.terms.iter().map(|t| t.0).filter(|&v| matches!(model.vars[v].role, VarRole::BlendPart { .. })).collect()
            })
            .collect();
        Search { model, sign, objective, binaries, groups, options, share_gates, k_parts: model.discretization.max(1) as f64 }
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.sign * self.model.objective_value(x)
    }

    /// Tightens bounds from row activities; false when a row cannot be met.
    fn propagate(&self, lo: &mut [f64], hi: &mut [f64]) -> bool {
        for _ in 0..PROPAGATION_PASSES {
            let mut changed = false;
            for row in &self.model.rows {
                let sides: &[f64] = match row.relation {
                    Relation::Le => &[1.0],
                    Relation::Ge => &[-1.0],
                    Relation::Eq => &[1.0, -1.0],
                };
                for &s in sides {
                    match self.tighten(row.terms.iter().map(|&(v, a)| (v, s * a)), s * row.rhs, lo, hi) {
                        None => return false,
                        Some(c) => changed |= c,
                    }
                }
            }
            if !changed {
                break;
            }
        }
        true
    }

    /// Bounds implied by `Σ a·x ≤ b`. Returns None if infeasible, else
    /// whether any bound moved.
    fn tighten(&self, terms: impl Iterator<Item = (usize, f64)> + Clone, b: f64, lo: &mut [f64], hi: &mut [f64]) -> Option<bool> {
        let contribution = |v: usize, a: f64, lo: &[f64], hi: &[f64]| if a > 0.0 { a * lo[v] } else { a * hi[v] };
        let mut min_act = 0.0;
        let mut infinite = 0usize;
        let mut scale = b.abs().max(1.0);
        for (v, a) in terms.clone() {
            let c = contribution(v, a, lo, hi);
            if c.is_finite() {
                min_act += c;
                scale = scale.max(c.abs());
            } else {
                infinite += 1;
            }
        }
        let tol = 1e-9 * scale;
        if infinite == 0 && min_act > b + tol {
            return None;
        }
        if infinite > 1 {
            return Some(false);
        }
        let mut changed = false;
        for (v, a) in terms {
            if a == 0.0 {
                continue;
            }
            let c = contribution(v, a, lo, hi);
            let rest = if c.is_finite() {
                if infinite > 0 {
                    continue;
                }
                min_act - c
            } else {
                min_act
            };
            let limit = (b - rest) / a;
            let slack = tol / a.abs() + 1e-12 * limit.abs();
            let binary = self.model.vars[v].kind == VarKind::Binary;
            if a > 0.0 {
                let mut new_hi = if binary { (limit + INTEGRALITY_TOL).floor() } else { limit + slack };
                if new_hi < lo[v] {
                    if lo[v] - new_hi > tol.max(1e-7) {
                        return None;
                    }
                    new_hi = lo[v];
                }
                let significant = if binary { new_hi < hi[v] } else { new_hi < hi[v] - 1e-7 * hi[v].abs().max(1.0) };
                if significant {
                    hi[v] = new_hi;
                    changed = true;
                }
            } else {
                let mut new_lo = if binary { (limit - INTEGRALITY_TOL).ceil() } else { limit - slack };
                if new_lo > hi[v] {
                    if new_lo - hi[v] > tol.max(1e-7) {
                        return None;
                    }
                    new_lo = hi[v];
                }
                let significant = if binary { new_lo > lo[v] } else { new_lo > lo[v] + 1e-7 * lo[v].abs().max(1.0) };
                if significant {
                    lo[v] = new_lo;
                    changed = true;
                }
            }
        }
        Some(changed)
    }

    /// LP over the variables not fixed by `lo`/`hi`, skipping rows that
    /// cannot bind under those bounds.
    fn node_lp(&self, lo: &[f64], hi: &[f64]) -> Result<NodeLp, SolveError> {
        let cuts = self.cuts(lo, hi);
        let open_gate = |r: usize| self.share_gates[r].iter().any(|&z| lo[z] < 0.5 && hi[z] > 0.5);
        let rows = self.model.rows.iter().enumerate().filter(|&(r, _)| !open_gate(r)).map(|(_, r)| (&r.terms[..], r.relation, r.rhs));
        let n = self.model.vars.len();
        let mut column = vec![usize::MAX; n];
        let mut free = Vec::new();
        for v in 0..n {
            if hi[v] - lo[v] > 1e-12 {
                column[v] = free.len();
                free.push(v);
            }
        }
        let mut lp = LpProblem::new(free.len());
        for (j, &v) in free.iter().enumerate() {
            lp.objective[j] = self.objective[v];
            lp.lower[j] = lo[v];
            lp.upper[j] = hi[v];
        }
        for (row_terms, relation, row_rhs) in rows.chain(cuts.iter().map(|c| (&c.terms[..], c.relation, c.rhs))) {
            let mut rhs = row_rhs;
            let mut terms = Vec::new();
            let (mut min_act, mut max_act) = (0.0, 0.0);
            for &(v, a) in row_terms {
                if column[v] == usize::MAX {
                    rhs -= a * lo[v];
                } else {
                    terms.push((column[v], a));
                    let (l, h) = (a * lo[v], a * hi[v]);
                    min_act += l.min(h);
                    max_act += l.max(h);
                }
            }
            let redundant = match relation {
                Relation::Le => max_act <= rhs,
                Relation::Ge => min_act >= rhs,
                Relation::Eq => terms.is_empty() && rhs == 0.0,
            };
            if redundant {
                continue;
            }
            if terms.is_empty() {
                let tol = 1e-7 * row_rhs.abs().max(1.0);
                let violated = match relation {
                    Relation::Le => rhs < -tol,
                    Relation::Ge => rhs > tol,
                    Relation::Eq => rhs.abs() > tol,
                };
                if violated {
                    return Ok(NodeLp::Infeasible);
                }
                continue;
            }
            lp.add_row(terms, relation, rhs);
        }
        match simplex_lp(&lp)? {
            LpOutcome::Infeasible => Ok(NodeLp::Infeasible),
            LpOutcome::Unbounded => Ok(NodeLp::Unbounded),
            LpOutcome::Optimal { x: reduced, .. } => {
                let mut x = lo.to_vec();
                for (j, &v) in free.iter().enumerate() {
                    x[v] = reduced[j];
                }
                Ok(NodeLp::Optimal { value: self.value(&x), x })
            }
        }
    }

    /// Open share range of a blend group under the node bounds.
    fn share_range(&self, group: &[usize], lo: &[f64], hi: &[f64]) -> Option<(usize, usize)> {
        let open = |k: &usize| hi[group[*k]] > 0.5 || lo[group[*k]] > 0.5;
        let first = (0..group.len()).find(open)?;
        let last = (0..group.len()).rev().find(open)?;
        Some((first, last))
    }

    /// Inequalities implied by the blend structure under the node bounds:
    /// the flow ratio of a blend stays within its open share range, and an
    /// entry limit caps the pollutant load using the lowest (highest)
    /// concentration each inflow can carry.
    fn cuts(&self, lo: &[f64], hi: &[f64]) -> Vec<Cut> {
        let mut cuts = Vec::new();
        let kf = self.k_parts;
        let mut ranges = Vec::with_capacity(self.model.blends.len());
        for blend in &self.model.blends {
            let range = self.share_range(&blend.parts, lo, hi);
            if let Some((kmin, kmax)) = range {
                let (x1, x2) = (blend.first_flow, blend.second_flow);
                if (kmax as f64) < kf {
                    cuts.push(Cut { terms: vec![(x1, kf - kmax as f64), (x2, -(kmax as f64))], relation: Relation::Le, rhs: 0.0 });
                }
                if kmin > 0 {
                    cuts.push(Cut { terms: vec![(x1, kf - kmin as f64), (x2, -(kmin as f64))], relation: Relation::Ge, rhs: 0.0 });
                }
            }
            ranges.push(range);
        }
        if self.model.quality_links.is_empty() {
            return cuts;
        }
        let mut c_lo = lo.to_vec();
        let mut c_hi = hi.to_vec();
        for link in &self.model.quality_links {
            let carries = |(x, _): &(usize, usize)| hi[*x] > 0.0;
            let entry = match link.blend.and_then(|g| ranges[g]) {
                Some((kmin, kmax)) if link.inflows.iter().all(carries) => {
                    let (c1, c2) = (link.inflows[0].1, link.inflows[1].1);
                    let at = |k: usize| {
                        let s = k as f64 / kf;
                        (s * c_lo[c1] + (1.0 - s) * c_lo[c2], s * c_hi[c1] + (1.0 - s) * c_hi[c2])
                    };
                    let (a, b) = (at(kmin), at(kmax));
                    Some((a.0.min(b.0), a.1.max(b.1)))
                }
                _ => link.inflows.iter().filter(|f| carries(f)).fold(None, |acc: Option<(f64, f64)>, &(_, c)| {
                    Some(acc.map_or((c_lo[c], c_hi[c]), |(l, h)| (l.min(c_lo[c]), h.max(c_hi[c]))))
                }),
            };
            let Some((entry_lo, entry_hi)) = entry else { continue };
            if let Some(u) = link.entry_upper {
                let terms: Vec<(usize, f64)> = link.inflows.iter().map(|&(x, c)| (x, c_lo[c] - u)).collect();
                if terms.iter().any(|&(_, a)| a > 0.0) {
                    cuts.push(Cut { terms, relation: Relation::Le, rhs: 0.0 });
                }
            }
            if let Some(l) = link.entry_lower {
                let terms: Vec<(usize, f64)> = link.inflows.iter().map(|&(x, c)| (x, c_hi[c] - l)).collect();
                if terms.iter().any(|&(_, a)| a < 0.0) {
                    cuts.push(Cut { terms, relation: Relation::Ge, rhs: 0.0 });
                }
            }
            let (exit_lo, exit_hi) = match link.rule {
                ExitRule::Rate(rr) => (rr * entry_lo, rr * entry_hi),
                ExitRule::Fixed(rf) => (rf, rf),
            };
            let v = link.var;
            c_lo[v] = c_lo[v].max(exit_lo);
            c_hi[v] = c_hi[v].min(exit_hi);
        }
        cuts
    }

    /// True when every share range is a single share and every option is
    /// integral, so only activity binaries can still be fractional.
    fn shares_settled(&self, x: &[f64], hi: &[f64]) -> bool {
        self.options.iter().all(|&v| !Self::is_fractional(x[v])) && self.groups.iter().all(|g| g.vars.iter().filter(|&&z| hi[z] > 0.5).count() < 2)
    }

    fn is_fractional(x: f64) -> bool {
        x > INTEGRALITY_TOL && x < 1.0 - INTEGRALITY_TOL
    }

    /// Children of a node whose relaxation `x` is not integral, most
    /// promising last (it is popped first).
    fn branch(&self, x: &[f64], lo: &[f64], hi: &[f64]) -> Option<Vec<(Vec<f64>, Vec<f64>)>> {
        if let Some(&pick) = self.options.iter().find(|&&v| Self::is_fractional(x[v])) {
            return Some(Self::fix_binary(pick, x, lo, hi));
        }
        for group in &self.groups {
            let open: Vec<usize> = (0..group.vars.len()).filter(|&k| hi[group.vars[k]] > 0.5).collect();
            if open.len() < 2 {
                continue;
            }
            let hint = match group.flows {
                Some((f, s)) if x[f] + x[s] > 1e-9 => self.k_parts * x[f] / (x[f] + x[s]),
                _ => group.vars.iter().enumerate().map(|(k, &z)| k as f64 * x[z]).sum(),
            };
            let split = open.iter().position(|&k| k as f64 > hint).unwrap_or(open.len()).clamp(1, open.len() - 1);
            let (left, right) = open.split_at(split);
            let close = |keep_closed: &[usize]| {
                let mut hi = hi.to_vec();
                for &k in keep_closed {
                    hi[group.vars[k]] = 0.0;
                }
                (lo.to_vec(), hi)
            };
            let near = hint.round() as usize;
            let left_first = left.contains(&near) || near < left[0];
            return Some(if left_first { vec![close(left), close(right)] } else { vec![close(right), close(left)] });
        }
        let pick = self
            .binaries
            .iter()
            .copied()
            .filter(|&v| Self::is_fractional(x[v]))
            .min_by(|&a, &b| (x[a] - 0.5).abs().total_cmp(&(x[b] - 0.5).abs()).then(a.cmp(&b)))?;
        Some(Self::fix_binary(pick, x, lo, hi))
    }

    fn fix_binary(pick: usize, x: &[f64], lo: &[f64], hi: &[f64]) -> Vec<(Vec<f64>, Vec<f64>)> {
        let fix = |value: f64| {
            let (mut lo, mut hi) = (lo.to_vec(), hi.to_vec());
            lo[pick] = value;
            hi[pick] = value;
            (lo, hi)
        };
        let up_first = x[pick] >= 0.5;
        if up_first {
            vec![fix(0.0), fix(1.0)]
        } else {
            vec![fix(1.0), fix(0.0)]
        }
    }

    /// Re-solves with every binary pinned to its rounded value.
    /// With `up`, fractional binaries are rounded up instead of to nearest;
    /// for activity binaries that keeps every edge with flow open.
    fn polish(&self, x: &[f64], lo: &[f64], hi: &[f64], up: bool) -> Result<Option<(f64, Vec<f64>)>, SolveError> {
        let (mut lo, mut hi) = (lo.to_vec(), hi.to_vec());
        for &v in &self.binaries {
            let r = if up && x[v] > INTEGRALITY_TOL { 1.0 } else { x[v].round() }.clamp(lo[v], hi[v]);
            lo[v] = r;
            hi[v] = r;
        }
        if !self.propagate(&mut lo, &mut hi) {
            return Ok(None);
        }
        match self.node_lp(&lo, &hi)? {
            NodeLp::Optimal { value, mut x } => {
                for v in &mut x {
                    if v.abs() < 1e-10 {
                        *v = 0.0;
                    }
                }
                Ok(Some((value, x)))
            }
            _ => Ok(None),
        }
    }
}

/// Rows that only bind once a particular share is selected.
fn is_share_gated(tag: RowTag) -> bool {
    matches!(
        tag,
        RowTag::BlendRatioUpper
            | RowTag::BlendRatioLower
            | RowTag::BlendQualityUpper
            | RowTag::BlendQualityLower
            | RowTag::BlendSecondOnlyQualityUpper
            | RowTag::BlendSecondOnlyQualityLower
            | RowTag::BlendFirstOnlyQualityUpper
            | RowTag::BlendFirstOnlyQualityLower
            | RowTag::EntryLimitLower
            | RowTag::EntryLimitUpper
    )
}

/// Rows `Σ z = 1` over three or more binaries with unit coefficients.
fn detect_groups(model: &MilpModel) -> Vec<Group> {
    model
        .rows
        .iter()
        .filter(|r| {
            r.relation == Relation::Eq
                && r.rhs == 1.0
                && r.terms.len() >= 3
                && r.terms.iter().all(|&(v, a)| a == 1.0 && model.vars[v].kind == VarKind::Binary)
        })
        .map(|r| Group { vars: r.terms.iter().map(|t| t.0).collect(), flows: None })
        .collect()
}

fn relative_gap(bound: f64, incumbent: f64) -> f64 {
    let diff = (bound - incumbent).max(0.0);
    if diff <= 1e-9 * incumbent.abs().max(1.0) {
        0.0
    } else if incumbent.abs() < 1e-10 {
        f64::INFINITY
    } else {
        diff / incumbent.abs()
    }
}

pub fn solve_exact_with(model: &MilpModel, limits: &SolveLimits, options: &ExactOptions) -> Result<MilpSolution, SolveError> {
    let started = Instant::now();
    let deadline = Duration::from_secs_f64(limits.max_time.max(0.0));
    let search = Search::new(model);

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    // Largest bound discarded only because it was within the gap tolerance.
    let mut gap_pruned = f64::NEG_INFINITY;
    let mut nodes = 0usize;
    let mut stopped_early = false;
    let mut stack = vec![Node {
        lo: model.vars.iter().map(|v| v.lower).collect(),
        hi: model.vars.iter().map(|v| v.upper).collect(),
        bound: f64::INFINITY,
    }];

    // Some(true) when the bound is pruned only thanks to the gap tolerance.
    let prune = |bound: f64, incumbent: &Option<(f64, Vec<f64>)>| -> Option<bool> {
        let (best, _) = incumbent.as_ref()?;
        let strict = best + 1e-9 * best.abs().max(1.0);
        if bound <= strict {
            return Some(false);
        }
        (bound <= best + limits.max_gap * best.abs()).then_some(true)
    };

    while let Some(mut node) = stack.pop() {
        if started.elapsed() >= deadline || nodes >= options.max_nodes {
            stack.push(node);
            stopped_early = true;
            break;
        }
        match prune(node.bound, &incumbent) {
            Some(by_gap) => {
                if by_gap {
                    gap_pruned = gap_pruned.max(node.bound);
                }
                continue;
            }
            None => {}
        }
        nodes += 1;
        if !search.propagate(&mut node.lo, &mut node.hi) {
            continue;
        }
        let (value, x) = match search.node_lp(&node.lo, &node.hi)? {
            NodeLp::Infeasible => continue,
            NodeLp::Unbounded => {
                let mut solution = MilpSolution::without_values(SolveStatus::Unbounded);
                solution.nodes = nodes;
                solution.solve_time = started.elapsed();
                return Ok(solution);
            }
            NodeLp::Optimal { value, x } => (value, x),
        };
        if let Some(by_gap) = prune(value, &incumbent) {
            if by_gap {
                gap_pruned = gap_pruned.max(value);
            }
            continue;
        }
        let offer = |candidate: f64, values: Vec<f64>, incumbent: &mut Option<(f64, Vec<f64>)>| {
            let better = match incumbent {
                None => true,
                Some((best, _)) => candidate > *best + 1e-9 * best.abs().max(1.0),
            };
            if better {
                log::debug!("incumbent {} after {nodes} nodes", search.sign * candidate);
                *incumbent = Some((candidate, values));
            }
        };
        let fractional = search.binaries.iter().any(|&v| Search::is_fractional(x[v]));
        if fractional && search.shares_settled(&x, &node.hi) {
            // Opening every edge that carries flow often attains the bound.
            if let Some((candidate, values)) = search.polish(&x, &node.lo, &node.hi, true)? {
                offer(candidate, values, &mut incumbent);
                if value <= candidate + 1e-9 * candidate.abs().max(1.0) {
                    continue;
                }
            }
        }
        match search.branch(&x, &node.lo, &node.hi) {
            Some(children) => {
                for (lo, hi) in children {
                    stack.push(Node { lo, hi, bound: value });
                }
            }
            None => {
                if let Some((candidate, values)) = search.polish(&x, &node.lo, &node.hi, false)? {
                    offer(candidate, values, &mut incumbent);
                }
            }
        }
    }

    let solve_time = started.elapsed();
    let open_bound = stack.iter().map(|n| n.bound).fold(f64::NEG_INFINITY, f64::max);
    let Some((best, values)) = incumbent else {
        if stopped_early {
            if nodes >= options.max_nodes {
                return Err(SolveError::BudgetExceeded { remaining: stack.len() });
            }
            return Ok(MilpSolution { nodes, solve_time, ..MilpSolution::without_values(SolveStatus::TimedOut) });
        }
        return Ok(MilpSolution { nodes, solve_time, ..MilpSolution::without_values(SolveStatus::Infeasible) });
    };
    let bound = gap_pruned.max(open_bound).max(best);
    let gap = relative_gap(bound, best);
    let status = if !stopped_early && gap_pruned == f64::NEG_INFINITY {
        SolveStatus::Optimal
    } else if gap <= limits.max_gap {
        SolveStatus::FeasibleWithinGap
    } else {
        SolveStatus::TimedOut
    };
    let gap = if status == SolveStatus::Optimal { 0.0 } else { gap };
    Ok(MilpSolution { status, objective: Some(search.sign * best), values, gap: Some(gap), nodes, solve_time })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{Row, RowTag, VarRole, Variable};
    use crate::network::Sense;

    fn var(name: &str, kind: VarKind, upper: f64) -> Variable {
        Variable { name: name.into(), kind, lower: 0.0, upper, role: VarRole::Unknown }
    }

    fn row(terms: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> Row {
        Row { tag: RowTag::Imported, element: String::new(), terms, relation, rhs }
    }

    #[test]
    fn continuous_model_is_one_lp() {
        let mut m = MilpModel::empty(Sense::Maximize);
        m.vars.push(var("x", VarKind::Continuous, 5.0));
        m.objective.push((0, 1.0));
        let s = solve_exact(&m, &SolveLimits::exact()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_eq!(s.objective, Some(5.0));
        assert_eq!(s.nodes, 1);
    }

    #[test]
    fn knapsack() {
        // max 5a + 4b + 3c  s.t. 2a + 3b + c <= 5; a and b together give 9
        let mut m = MilpModel::empty(Sense::Maximize);
        for name in ["a", "b", "c"] {
            m.vars.push(var(name, VarKind::Binary, 1.0));
        }
        m.objective = vec![(0, 5.0), (1, 4.0), (2, 3.0)];
        m.rows.push(row(vec![(0, 2.0), (1, 3.0), (2, 1.0)], Relation::Le, 5.0));
        let s = solve_exact(&m, &SolveLimits::exact()).unwrap();
        assert_eq!(s.objective, Some(9.0));
        assert_eq!(s.values, vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn infeasible_and_minimize() {
        let mut m = MilpModel::empty(Sense::Maximize);
        m.vars.push(var("x", VarKind::Continuous, 10.0));
        m.rows.push(row(vec![(0, 1.0)], Relation::Ge, 1.0));
        m.rows.push(row(vec![(0, 1.0)], Relation::Le, 0.0));
        assert_eq!(solve_exact(&m, &SolveLimits::exact()).unwrap().status, SolveStatus::Infeasible);

        let mut m = MilpModel::empty(Sense::Minimize);
        m.vars.push(var("x", VarKind::Continuous, 10.0));
        m.vars.push(var("y", VarKind::Binary, 1.0));
        m.objective = vec![(0, 1.0), (1, 3.0)];
        // x >= 2 unless y = 1
        m.rows.push(row(vec![(0, 1.0), (1, 2.0)], Relation::Ge, 2.0));
        let s = solve_exact(&m, &SolveLimits::exact()).unwrap();
        assert_eq!(s.objective, Some(2.0));
    }

    #[test]
    fn one_of_many_group_is_detected() {
        // pick exactly one z_k; objective prefers k = 3 but a side row forbids k >= 3
        let mut m = MilpModel::empty(Sense::Maximize);
        for k in 0..5 {
            m.vars.push(var(&format!("z{k}"), VarKind::Binary, 1.0));
            m.objective.push((k, k as f64));
        }
        m.rows.push(row((0..5).map(|k| (k, 1.0)).collect(), Relation::Eq, 1.0));
        m.rows.push(row(vec![(3, 1.0), (4, 1.0)], Relation::Le, 0.0));
        let s = solve_exact(&m, &SolveLimits::exact()).unwrap();
        assert_eq!(s.objective, Some(2.0));
        assert_eq!(s.status, SolveStatus::Optimal);
    }

    #[test]
    fn zero_node_budget_without_incumbent_is_an_error() {
        let mut m = MilpModel::empty(Sense::Maximize);
        m.vars.push(var("y", VarKind::Binary, 1.0));
        let err = solve_exact_with(&m, &SolveLimits::exact(), &ExactOptions { max_nodes: 0 }).unwrap_err();
        assert_eq!(err, SolveError::BudgetExceeded { remaining: 1 });
    }
}

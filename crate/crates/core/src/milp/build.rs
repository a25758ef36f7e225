use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::bounds::{derive_bounds, DerivedBounds};
use super::objective::objective_terms;
use super::{BlendGroup, ExitRule, MilpModel, QualityLink, Relation, Row, RowTag, VarKind, VarRole, Variable, DEFAULT_DISCRETIZATION, DEFAULT_MU};
use crate::error::{Error, Result};
use crate::network::{FlowReduction, Network, Objective, QualityReduction};
use crate::preprocess::CanonicalNetwork;
use crate::topology::Topology;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConflictMode {
    /// At most one option of each conflict set may carry flow.
    #[default]
    ExclusiveOptions,
    /// Conflict rows are left out; options may be combined.
    AllOptionsAvailable,
}

/// An option is either the label used in edges' `option_group`, or an
/// explicit named list of edge ids.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OptionRef {
    Label(String),
    Edges { name: String, edges: Vec<String> },
}

impl OptionRef {
    pub fn name(&self) -> &str {
        match self {
            OptionRef::Label(name) | OptionRef::Edges { name, .. } => name,
        }
    }
}

/// Options that compete with each other.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictSet {
    pub name: String,
    pub options: Vec<OptionRef>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedOption {
    pub set: String,
    pub name: String,
    /// Original edge ids.
    pub edges: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildOptions {
    /// Discretization number K.
    #[serde(rename = "K")]
    pub discretization: u32,
    /// Overrides the network's own objective.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<Objective>,
    /// Conflict sets; when empty, all `option_group` labels form one set.
    #[serde(rename = "optionsCompared")]
    pub conflicts: Vec<ConflictSet>,
    pub conflict_mode: ConflictMode,
    /// Bound for edges the data leaves unbounded.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flow_bound: Option<f64>,
    pub mu: f64,
    /// Bound exit concentrations of RR components by `RR·l` and `RR·u`.
    pub exit_quality: bool,
    /// Bound the blended entry concentration by `l` and `u`.
    pub entry_limits: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            discretization: DEFAULT_DISCRETIZATION,
            objective: None,
            conflicts: Vec::new(),
            conflict_mode: ConflictMode::ExclusiveOptions,
            flow_bound: None,
            mu: DEFAULT_MU,
            exit_quality: true,
            entry_limits: true,
        }
    }
}

impl BuildOptions {
    pub fn with_k(k: u32) -> Self {
        BuildOptions { discretization: k, ..BuildOptions::default() }
    }
}

/// Resolves conflict sets against the original edge ids of `net`.
pub fn resolve_options(net: &Network, conflicts: &[ConflictSet]) -> Result<Vec<ResolvedOption>> {
    let labelled = |label: &str| -> Vec<String> {
        net.edges.iter().filter(|e| e.option_group.as_deref() == Some(label)).map(|e| e.id()).collect()
    };
    let default_set;
    let conflicts = if conflicts.is_empty() {
        let labels: BTreeSet<&str> = net.edges.iter().filter_map(|e| e.option_group.as_deref()).collect();
        if labels.is_empty() {
            return Ok(Vec::new());
        }
        default_set = vec![ConflictSet { name: "options".into(), options: labels.into_iter().map(|l| OptionRef::Label(l.into())).collect() }];
        &default_set[..]
    } else {
        conflicts
    };

    let mut resolved = Vec::new();
    for set in conflicts {
        let mut owner: BTreeMap<String, &str> = BTreeMap::new();
        for option in &set.options {
            let edges = match option {
                OptionRef::Label(label) => labelled(label),
                OptionRef::Edges { edges, .. } => {
                    if let Some(missing) = edges.iter().find(|e| net.edge(e).is_none()) {
                        return Err(Error::UnknownOption(missing.clone()));
                    }
                    edges.clone()
                }
            };
            if edges.is_empty() {
                return Err(Error::UnknownOption(option.name().to_string()));
            }
            for e in &edges {
                if let Some(prev) = owner.insert(e.clone(), option.name()) {
                    if prev != option.name() {
                        return Err(Error::OverlappingOptions { set: set.name.clone(), edge: e.clone() });
                    }
                }
            }
            resolved.push(ResolvedOption { set: set.name.clone(), name: option.name().to_string(), edges });
        }
    }
    Ok(resolved)
}

struct Builder<'a> {
    net: &'a Network,
    topo: Topology,
    model: MilpModel,
    names: BTreeSet<String>,
    x: Vec<usize>,
    y: Vec<usize>,
    /// Concentration variable per component index and pollutant position.
    c: Vec<Vec<usize>>,
}

/// Replaces characters outside `[A-Za-z0-9_]` so names are valid in LP files.
fn sanitize(raw: &str) -> String {
    raw.chars().map(|ch| if ch.is_ascii_alphanumeric() || ch == '_' { ch } else { '_' }).collect()
}

impl<'a> Builder<'a> {
    fn var(&mut self, raw_name: String, kind: VarKind, lower: f64, upper: f64, role: VarRole) -> usize {
        let mut name = sanitize(&raw_name);
        while !self.names.insert(name.clone()) {
            name.push('_');
        }
        self.model.vars.push(Variable { name, kind, lower, upper, role });
        self.model.vars.len() - 1
    }

    fn row(&mut self, tag: RowTag, element: String, terms: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.model.rows.push(Row { tag, element, terms, relation, rhs });
    }

    fn activity_range(&self, terms: &[(usize, f64)]) -> (f64, f64) {
        terms.iter().fold((0.0, 0.0), |(lo, hi), &(v, a)| {
            let var = &self.model.vars[v];
            if a >= 0.0 {
                (lo + a * var.lower, hi + a * var.upper)
            } else {
                (lo + a * var.upper, hi + a * var.lower)
            }
        })
    }

    /// Emits `terms rel rhs`, enforced only when every gate binary is 1.
    /// The big-M is the largest violation the expression can reach within
    /// the variable bounds, so a relaxed row never cuts anything off.
    fn gated(&mut self, tag: RowTag, element: String, mut terms: Vec<(usize, f64)>, relation: Relation, rhs: f64, gates: &[usize]) {
        let (min, max) = self.activity_range(&terms);
        let g = gates.len() as f64;
        match relation {
            Relation::Le => {
                let m = (max - rhs).max(0.0);
                terms.extend(gates.iter().map(|&z| (z, m)));
                self.row(tag, element, terms, Relation::Le, rhs + m * g);
            }
            Relation::Ge => {
                let m = (rhs - min).max(0.0);
                terms.extend(gates.iter().map(|&z| (z, -m)));
                self.row(tag, element, terms, Relation::Ge, rhs - m * g);
            }
            Relation::Eq => {
                let m_up = (max - rhs).max(0.0);
                let m_down = (rhs - min).max(0.0);
                let mut up = terms.clone();
                up.extend(gates.iter().map(|&z| (z, m_up)));
                self.row(tag, element.clone(), up, Relation::Le, rhs + m_up * g);
                terms.extend(gates.iter().map(|&z| (z, -m_down)));
                self.row(tag, element, terms, Relation::Ge, rhs - m_down * g);
            }
        }
    }

    /// Gated equality emitted as a tagged upper/lower pair.
    fn gated_pair(&mut self, tags: (RowTag, RowTag), element: String, terms: Vec<(usize, f64)>, rhs: f64, gates: &[usize]) {
        self.gated(tags.0, element.clone(), terms.clone(), Relation::Le, rhs, gates);
        self.gated(tags.1, element, terms, Relation::Ge, rhs, gates);
    }

    fn source(&self, e: usize) -> usize {
        self.topo.ends(e).expect("validated edge").0
    }

    fn sum_x(&self, edges: &[usize], coef: f64) -> Vec<(usize, f64)> {
        edges.iter().map(|&e| (self.x[e], coef)).collect()
    }
}

/// Builds the linearized model of a canonical network.
pub fn build(canonical: &CanonicalNetwork, options: &BuildOptions) -> Result<MilpModel> {
    let k_parts = options.discretization;
    if k_parts == 0 {
        return Err(Error::InvalidDiscretization);
    }
    let net = &canonical.network;
    let objective = options
        .objective
        .clone()
        .or_else(|| net.objective.clone())
        .ok_or_else(|| Error::InvalidObjective("no objective given".into()))?;
    let DerivedBounds { edge_upper, quality_range, .. } = derive_bounds(net, options.flow_bound, options.mu, options.exit_quality)?;
    let topo = Topology::new(net);
    let order = topo.topological_order()?;

    // Original endpoints per canonical edge, for objective scopes and options.
    let original_ends: Vec<Option<(String, String)>> = (0..net.edges.len())
        .map(|e| {
            canonical.original_edge_id(e).map(|id| {
                let (a, b) = crate::network::split_edge_id(&id).expect("edge ids contain a separator");
                (a.to_string(), b.to_string())
            })
        })
        .collect();
    let terms = objective_terms(&net.components, &original_ends, &objective)?;

    let mut b = Builder {
        net,
        topo,
        model: MilpModel::empty(objective.sense),
        names: BTreeSet::new(),
        x: Vec::new(),
        y: Vec::new(),
        c: Vec::new(),
    };
    b.model.discretization = k_parts;
    b.model.mu = options.mu;
    let pollutants: Vec<String> = net.pollutant_ids().map(str::to_string).collect();

    for (e, edge) in net.edges.iter().enumerate() {
        let id = edge.id();
        let x = b.var(format!("x_{}_{}", edge.from, edge.to), VarKind::Continuous, 0.0, edge_upper[e], VarRole::Flow { edge: id });
        b.x.push(x);
    }
    for v in 0..b.topo.len() {
        let id = b.topo.id(v).to_string();
        let vars = pollutants
            .iter()
            .enumerate()
            .map(|(pi, p)| {
                let (lo, hi) = quality_range[v][pi];
                b.var(format!("c_{id}_{p}"), VarKind::Continuous, lo, hi, VarRole::Quality { component: id.clone(), pollutant: p.clone() })
            })
            .collect();
        b.c.push(vars);
    }
    for edge in &net.edges {
        let y = b.var(format!("y_{}_{}", edge.from, edge.to), VarKind::Binary, 0.0, 1.0, VarRole::Active { edge: edge.id() });
        b.y.push(y);
    }

    // Blend groups: the z-carrying inflow is the one with the smaller source id.
    let mut blends: BTreeMap<usize, (usize, usize, Vec<usize>)> = BTreeMap::new();
    for &v in &order {
        let ins = b.topo.inbound(v).to_vec();
        if ins.len() != 2 {
            continue;
        }
        let (first, second) = if b.topo.id(b.source(ins[0])) <= b.topo.id(b.source(ins[1])) { (ins[0], ins[1]) } else { (ins[1], ins[0]) };
        let id = b.topo.id(v).to_string();
        let parts: Vec<usize> = (0..=k_parts)
            .map(|k| b.var(format!("z_{id}_{k}"), VarKind::Binary, 0.0, 1.0, VarRole::BlendPart { component: id.clone(), parts: k }))
            .collect();
        b.model.blends.push(BlendGroup { component: id, parts: parts.clone(), first_flow: b.x[first], second_flow: b.x[second] });
        blends.insert(v, (first, second, parts));
    }

    let resolved = resolve_options(&uncontracted_view(canonical), &options.conflicts)?;
    let mut option_vars: BTreeMap<String, usize> = BTreeMap::new();
    if options.conflict_mode == ConflictMode::ExclusiveOptions {
        for option in &resolved {
            if !option_vars.contains_key(&option.name) {
                let w = b.var(format!("w_{}", option.name), VarKind::Binary, 0.0, 1.0, VarRole::Option { name: option.name.clone() });
                option_vars.insert(option.name.clone(), w);
            }
        }
    }

    flow_rows(&mut b, &order);
    for (&v, (first, second, parts)) in &blends {
        blend_rows(&mut b, v, *first, *second, parts, k_parts);
    }
    for &v in &order {
        if b.topo.inbound(v).is_empty() {
            continue;
        }
        for (pi, p) in pollutants.iter().enumerate() {
            quality_rows(&mut b, v, pi, p, blends.get(&v), k_parts, options);
            quality_link(&mut b, v, pi, p, blends.get(&v), options);
        }
    }

    if options.conflict_mode == ConflictMode::ExclusiveOptions {
        let canonical_index: BTreeMap<String, usize> =
            (0..net.edges.len()).filter_map(|e| canonical.original_edge_id(e).map(|id| (id, e))).collect();
        for option in &resolved {
            let w = option_vars[&option.name];
            for edge in &option.edges {
                let e = canonical_index[edge];
                b.row(RowTag::OptionLink, format!("{}/{}", option.name, edge), vec![(b.y[e], 1.0), (w, -1.0)], Relation::Le, 0.0);
            }
        }
        let mut sets: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
        for option in &resolved {
            sets.entry(option.set.as_str()).or_default().insert(option_vars[&option.name]);
        }
        for (set, ws) in sets {
            b.row(RowTag::OptionExclusive, set.to_string(), ws.into_iter().map(|w| (w, 1.0)).collect(), Relation::Le, 1.0);
        }
    }

    for e in 0..net.edges.len() {
        if terms.flow[e] != 0.0 {
            b.model.objective.push((b.x[e], terms.flow[e]));
        }
        if terms.active[e] != 0.0 {
            b.model.objective.push((b.y[e], terms.active[e]));
        }
    }
    Ok(b.model)
}

/// The canonical network with retargeted edges restored to their original
/// ids, used to resolve option membership.
fn uncontracted_view(canonical: &CanonicalNetwork) -> Network {
    let mut view = canonical.network.clone();
    view.edges = (0..canonical.network.edges.len())
        .filter_map(|e| {
            canonical.original_edge_id(e).map(|id| {
                let (from, to) = crate::network::split_edge_id(&id).expect("edge ids contain a separator");
                crate::network::Edge { from: from.into(), to: to.into(), ..canonical.network.edges[e].clone() }
            })
        })
        .collect();
    view
}

fn flow_rows(b: &mut Builder<'_>, order: &[usize]) {
    let mu = b.model.mu;
    for &v in order {
        let id = b.topo.id(v).to_string();
        let attrs = &b.net.components[&id].attrs;
        let ins = b.topo.inbound(v).to_vec();
        let outs = b.topo.outbound(v).to_vec();
        if ins.is_empty() && !outs.is_empty() {
            if let Some(q) = attrs.supply.filter(|&q| q > 0.0) {
                let terms = b.sum_x(&outs, 1.0);
                b.row(RowTag::SupplyBalance, id.clone(), terms, Relation::Eq, q);
            }
        }
        if outs.is_empty() && !ins.is_empty() {
            if let Some(d) = attrs.demand.filter(|&d| d > 0.0) {
                let terms = b.sum_x(&ins, 1.0);
                b.row(RowTag::DemandCover, id.clone(), terms, Relation::Ge, d);
            }
        }
        if let Some(cap) = attrs.capacity {
            if !ins.is_empty() {
                let terms = b.sum_x(&ins, 1.0);
                b.row(RowTag::InletCapacity, id.clone(), terms, Relation::Le, cap);
            }
            if !outs.is_empty() {
                let terms = b.sum_x(&outs, 1.0);
                b.row(RowTag::OutletCapacity, id.clone(), terms, Relation::Le, cap);
            }
        }
        if ins.is_empty() || outs.is_empty() {
            continue;
        }
        match attrs.flow_reduction().unwrap_or(FlowReduction::Rate(1.0)) {
            FlowReduction::Rate(sr) => {
                let mut terms = b.sum_x(&ins, sr);
                terms.extend(b.sum_x(&outs, -1.0));
                b.row(RowTag::FlowConservation, id.clone(), terms, Relation::Eq, 0.0);
            }
            FlowReduction::Fixed(sf) => {
                let out_terms = b.sum_x(&outs, 1.0);
                for &e in &ins {
                    let element = format!("{id}/{}", b.net.edges[e].id());
                    b.gated_pair((RowTag::FixedOutletUpper, RowTag::FixedOutletLower), element, out_terms.clone(), sf, &[b.y[e]]);
                }
                let mut gate = out_terms;
                gate.extend(ins.iter().map(|&e| (b.y[e], -sf)));
                b.row(RowTag::FixedOutletGate, id.clone(), gate, Relation::Le, 0.0);
            }
        }
    }
    for e in 0..b.net.edges.len() {
        let id = b.net.edges[e].id();
        let upper = b.model.vars[b.x[e]].upper;
        b.row(RowTag::EdgeActivationUpper, id.clone(), vec![(b.x[e], 1.0), (b.y[e], -upper)], Relation::Le, 0.0);
        b.row(RowTag::EdgeActivationLower, id, vec![(b.x[e], 1.0), (b.y[e], -mu)], Relation::Ge, 0.0);
    }
}

fn blend_rows(b: &mut Builder<'_>, v: usize, first: usize, second: usize, parts: &[usize], k_parts: u32) {
    let id = b.topo.id(v).to_string();
    let kf = k_parts as f64;
    b.row(RowTag::BlendSelect, id.clone(), parts.iter().map(|&z| (z, 1.0)).collect(), Relation::Eq, 1.0);
    for k in 1..k_parts {
        let kk = k as f64;
        let terms = vec![(b.x[first], kf - kk), (b.x[second], -kk)];
        b.gated_pair((RowTag::BlendRatioUpper, RowTag::BlendRatioLower), format!("{id}/k{k}"), terms, 0.0, &[parts[k as usize]]);
    }
    b.row(RowTag::BlendZeroShare, id.clone(), vec![(parts[0], 1.0), (b.y[first], 1.0)], Relation::Eq, 1.0);
    b.row(RowTag::BlendFullShare, id, vec![(parts[k_parts as usize], 1.0), (b.y[second], 1.0)], Relation::Le, 1.0);
}

fn quality_rows(
    b: &mut Builder<'_>,
    v: usize,
    pi: usize,
    p: &str,
    blend: Option<&(usize, usize, Vec<usize>)>,
    k_parts: u32,
    options: &BuildOptions,
) {
    let id = b.topo.id(v).to_string();
    let attrs = &b.net.components[&id].attrs;
    let cj = b.c[v][pi];
    let ins = b.topo.inbound(v).to_vec();
    let kf = k_parts as f64;
    let (lower, upper) = attrs.quality_bounds(p);

    // Gating cases of the (blended) entry concentration: each case pairs the
    // entry expression with the binaries that select it.
    let mut cases: Vec<(String, Vec<(usize, f64)>, Vec<usize>, CaseKind)> = Vec::new();
    match (ins.len(), blend) {
        (2, Some((first, second, parts))) => {
            let ci = b.c[b.source(*first)][pi];
            let cr = b.c[b.source(*second)][pi];
            cases.push((format!("{id}/{p}/second"), vec![(cr, 1.0)], vec![parts[0], b.y[*second]], CaseKind::SecondOnly));
            for k in 1..k_parts {
                let share = k as f64 / kf;
                let terms = vec![(ci, share), (cr, 1.0 - share)];
                cases.push((format!("{id}/{p}/k{k}"), terms, vec![parts[k as usize]], CaseKind::Blend));
            }
            cases.push((format!("{id}/{p}/first"), vec![(ci, 1.0)], vec![parts[k_parts as usize]], CaseKind::FirstOnly));
        }
        _ => {
            for &e in &ins {
                let ci = b.c[b.source(e)][pi];
                cases.push((format!("{id}/{p}/{}", b.net.edges[e].id()), vec![(ci, 1.0)], vec![b.y[e]], CaseKind::Single));
            }
        }
    }

    match attrs.quality_reduction(p) {
        QualityReduction::Rate(rr) => {
            for (element, entry, gates, kind) in &cases {
                let mut terms = vec![(cj, 1.0)];
                terms.extend(entry.iter().map(|&(c, a)| (c, -rr * a)));
                b.gated_pair(kind.tags(), element.clone(), terms, 0.0, gates);
            }
            if options.exit_quality {
                if let Some(l) = lower {
                    b.row(RowTag::ExitQualityLower, format!("{id}/{p}"), vec![(cj, 1.0)], Relation::Ge, rr * l);
                }
                if let Some(u) = upper {
                    b.row(RowTag::ExitQualityUpper, format!("{id}/{p}"), vec![(cj, 1.0)], Relation::Le, rr * u);
                }
            }
        }
        QualityReduction::Fixed(rf) => {
            for &e in &ins {
                let element = format!("{id}/{p}/{}", b.net.edges[e].id());
                b.gated_pair((RowTag::FixedQualityUpper, RowTag::FixedQualityLower), element, vec![(cj, 1.0)], rf, &[b.y[e]]);
            }
        }
    }

    if options.entry_limits {
        for (element, entry, gates, _) in &cases {
            if let Some(l) = lower {
                b.gated(RowTag::EntryLimitLower, element.clone(), entry.clone(), Relation::Ge, l, gates);
            }
            if let Some(u) = upper {
                b.gated(RowTag::EntryLimitUpper, element.clone(), entry.clone(), Relation::Le, u, gates);
            }
        }
    }
}

fn quality_link(b: &mut Builder<'_>, v: usize, pi: usize, p: &str, blend: Option<&(usize, usize, Vec<usize>)>, options: &BuildOptions) {
    let attrs = &b.net.components[b.topo.id(v)].attrs;
    let rule = match attrs.quality_reduction(p) {
        QualityReduction::Rate(rr) => ExitRule::Rate(rr),
        QualityReduction::Fixed(rf) => ExitRule::Fixed(rf),
    };
    let (lower, upper) = if options.entry_limits { attrs.quality_bounds(p) } else { (None, None) };
    let ins = match blend {
        Some((first, second, _)) => vec![*first, *second],
        None => b.topo.inbound(v).to_vec(),
    };
    let inflows = ins.iter().map(|&e| (b.x[e], b.c[b.source(e)][pi])).collect();
    let blend = blend.map(|(first, ..)| b.model.blends.iter().position(|g| g.first_flow == b.x[*first]).expect("blend group registered"));
    b.model.quality_links.push(QualityLink { var: b.c[v][pi], rule, inflows, blend, entry_lower: lower, entry_upper: upper });
}

#[derive(Clone, Copy)]
enum CaseKind {
    Single,
    Blend,
    SecondOnly,
    FirstOnly,
}

impl CaseKind {
    fn tags(self) -> (RowTag, RowTag) {
        match self {
            CaseKind::Single => (RowTag::SingleInflowQualityUpper, RowTag::SingleInflowQualityLower),
            CaseKind::Blend => (RowTag::BlendQualityUpper, RowTag::BlendQualityLower),
            CaseKind::SecondOnly => (RowTag::BlendSecondOnlyQualityUpper, RowTag::BlendSecondOnlyQualityLower),
            CaseKind::FirstOnly => (RowTag::BlendFirstOnlyQualityUpper, RowTag::BlendFirstOnlyQualityLower),
        }
    }
}

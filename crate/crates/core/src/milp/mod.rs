//! Solver-agnostic mixed-integer linear model of a canonical network.
//!
//! Flows are continuous `x` variables per edge, exit concentrations are
//! continuous `c` variables per (component, pollutant), and edge activity
//! `Y`, blend shares `z` and design options `w` are binaries. Every row
//! carries a [`RowTag`] naming the modeling rule it encodes.

mod bounds;
mod build;
pub mod lp_format;
mod objective;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::network::Sense;

pub use bounds::{derive_big_m, derive_bounds, BigMPolicy, DerivedBounds};
pub use build::{build, resolve_options, BuildOptions, ConflictMode, ConflictSet, OptionRef, ResolvedOption};
pub use objective::{objective_terms, ObjectiveTerms};

/// Default discretization number: a blend ratio is chosen from `k / 200`.
pub const DEFAULT_DISCRETIZATION: u32 = 200;
/// Default minimum flow on an active edge, m³/h.
pub const DEFAULT_MU: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarRole {
    Flow { edge: String },
    Quality { component: String, pollutant: String },
    Active { edge: String },
    BlendPart { component: String, parts: u32 },
    Option { name: String },
    /// Variables read from an LP file without role metadata.
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    pub role: VarRole,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }
}

/// What a constraint row enforces. Paired `Upper`/`Lower` tags are the two
/// halves of a (possibly gated) equality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RowTag {
    SupplyBalance,
    DemandCover,
    InletCapacity,
    OutletCapacity,
    EdgeActivationUpper,
    EdgeActivationLower,
    FlowConservation,
    FixedOutletUpper,
    FixedOutletLower,
    FixedOutletGate,
    BlendSelect,
    BlendRatioUpper,
    BlendRatioLower,
    BlendZeroShare,
    BlendFullShare,
    SingleInflowQualityUpper,
    SingleInflowQualityLower,
    BlendQualityUpper,
    BlendQualityLower,
    BlendSecondOnlyQualityUpper,
    BlendSecondOnlyQualityLower,
    BlendFirstOnlyQualityUpper,
    BlendFirstOnlyQualityLower,
    FixedQualityUpper,
    FixedQualityLower,
    ExitQualityLower,
    ExitQualityUpper,
    EntryLimitLower,
    EntryLimitUpper,
    OptionLink,
    OptionExclusive,
    /// Rows read from an LP file.
    Imported,
}

impl RowTag {
    pub fn name(self) -> &'static str {
        match self {
            RowTag::SupplyBalance => "SupplyBalance",
            RowTag::DemandCover => "DemandCover",
            RowTag::InletCapacity => "InletCapacity",
            RowTag::OutletCapacity => "OutletCapacity",
            RowTag::EdgeActivationUpper => "EdgeActivationUpper",
            RowTag::EdgeActivationLower => "EdgeActivationLower",
            RowTag::FlowConservation => "FlowConservation",
            RowTag::FixedOutletUpper => "FixedOutletUpper",
            RowTag::FixedOutletLower => "FixedOutletLower",
            RowTag::FixedOutletGate => "FixedOutletGate",
            RowTag::BlendSelect => "BlendSelect",
            RowTag::BlendRatioUpper => "BlendRatioUpper",
            RowTag::BlendRatioLower => "BlendRatioLower",
            RowTag::BlendZeroShare => "BlendZeroShare",
            RowTag::BlendFullShare => "BlendFullShare",
            RowTag::SingleInflowQualityUpper => "SingleInflowQualityUpper",
            RowTag::SingleInflowQualityLower => "SingleInflowQualityLower",
            RowTag::BlendQualityUpper => "BlendQualityUpper",
            RowTag::BlendQualityLower => "BlendQualityLower",
            RowTag::BlendSecondOnlyQualityUpper => "BlendSecondOnlyQualityUpper",
            RowTag::BlendSecondOnlyQualityLower => "BlendSecondOnlyQualityLower",
            RowTag::BlendFirstOnlyQualityUpper => "BlendFirstOnlyQualityUpper",
            RowTag::BlendFirstOnlyQualityLower => "BlendFirstOnlyQualityLower",
            RowTag::FixedQualityUpper => "FixedQualityUpper",
            RowTag::FixedQualityLower => "FixedQualityLower",
            RowTag::ExitQualityLower => "ExitQualityLower",
            RowTag::ExitQualityUpper => "ExitQualityUpper",
            RowTag::EntryLimitLower => "EntryLimitLower",
            RowTag::EntryLimitUpper => "EntryLimitUpper",
            RowTag::OptionLink => "OptionLink",
            RowTag::OptionExclusive => "OptionExclusive",
            RowTag::Imported => "Imported",
        }
    }
}

impl fmt::Display for RowTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub tag: RowTag,
    /// The network element (and case) the row belongs to, e.g. `Tr1/COD/k3`.
    pub element: String,
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, a)| a * values[v]).sum()
    }

    /// Amount by which `values` violate the row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// The `z` variables of one blending point, `parts[k]` selecting a share of
/// `k / K` for the flow variable `first_flow`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlendGroup {
    pub component: String,
    pub parts: Vec<usize>,
    pub first_flow: usize,
    pub second_flow: usize,
}

/// Exit concentration rule of a component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ExitRule {
    /// Exit = rate × blended entry concentration.
    Rate(f64),
    /// Exit is fixed whenever the component is active.
    Fixed(f64),
}

/// How one concentration variable follows from the concentrations upstream.
/// Redundant with the gated rows; it lets a solver bound concentrations
/// without decoding them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityLink {
    pub var: usize,
    pub rule: ExitRule,
    /// `(flow variable, upstream concentration variable)` per inflow. For a
    /// blend the first entry is the inflow that carries the share.
    pub inflows: Vec<(usize, usize)>,
    /// Index into [`MilpModel::blends`].
    pub blend: Option<usize>,
    /// Entry limits, when they are enforced.
    pub entry_lower: Option<f64>,
    pub entry_upper: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MilpModel {
    pub vars: Vec<Variable>,
    pub rows: Vec<Row>,
    pub objective: Vec<(usize, f64)>,
    pub objective_constant: f64,
    pub sense: Sense,
    pub discretization: u32,
    pub mu: f64,
    pub blends: Vec<BlendGroup>,
    /// Concentration links of receiving components in topological order;
    /// empty for models read from LP files.
    #[serde(default)]
    pub quality_links: Vec<QualityLink>,
}

impl MilpModel {
    pub fn empty(sense: Sense) -> Self {
        MilpModel {
            vars: Vec::new(),
            rows: Vec::new(),
            objective: Vec::new(),
            objective_constant: 0.0,
            sense,
            discretization: 1,
            mu: DEFAULT_MU,
            blends: Vec::new(),
            quality_links: Vec::new(),
        }
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().map(|&(v, a)| a * values[v]).sum::<f64>()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn rows_tagged(&self, tag: RowTag) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(move |r| r.tag == tag)
    }

    /// Largest row or bound violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation(values));
        let bounds = self.vars.iter().zip(values).map(|(v, &x)| (v.lower - x).max(x - v.upper).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountProfile {
    pub n_continuous: usize,
    pub n_binary: usize,
    pub n_constraints: usize,
}

pub fn count_profile(model: &MilpModel) -> CountProfile {
    let n_binary = model.vars.iter().filter(|v| v.kind == VarKind::Binary).count();
    CountProfile { n_continuous: model.vars.len() - n_binary, n_binary, n_constraints: model.rows.len() }
}

/// Variable counts implied by the formulation for a canonical network with
/// `edges` edges, `blending_points` two-inflow components, `quality_cells`
/// (component, pollutant) pairs and `options` option variables.
pub fn expected_variable_counts(edges: usize, blending_points: usize, quality_cells: usize, k: u32, options: usize) -> (usize, usize) {
    let binary = edges + blending_points * (k as usize + 1) + options;
    (edges + quality_cells, binary)
}

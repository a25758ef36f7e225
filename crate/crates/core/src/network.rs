//! Declarative description of a water process network.
//!
//! A [`Network`] is a directed graph of components (sources, treatments,
//! tanks, applications, discharge points) joined by edges, plus the
//! pollutants tracked through it and an optional default [`Objective`].
//! Every attribute is optional; the formulation only emits the constraint
//! families whose data is present.
//!
//! The canonical document form is JSON with the top-level keys
//! `pollutants`, `components`, `edges` and `objective`. Absent attributes
//! are omitted, and components are keyed (and therefore ordered) by id, so
//! [`Network::to_canonical_json`] is byte-stable across parse/serialize
//! cycles.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub type ComponentId = String;

/// Separator used in edge identifiers (`"from->to"`).
pub const EDGE_SEPARATOR: &str = "->";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pollutant {
    pub id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub unit: String,
}

impl Pollutant {
    pub fn new(id: impl Into<String>, unit: impl Into<String>) -> Self {
        let id = id.into();
        Pollutant { name: id.clone(), id, unit: unit.into() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ComponentTag {
    FreshWaterSource,
    WastewaterSource,
    Treatment,
    Tank,
    Application,
    Discharge,
    Dummy,
}

impl ComponentTag {
    pub fn is_source(self) -> bool {
        matches!(self, ComponentTag::FreshWaterSource | ComponentTag::WastewaterSource)
    }

    pub fn is_sink(self) -> bool {
        matches!(self, ComponentTag::Application | ComponentTag::Discharge)
    }
}

/// Per-pollutant attributes of a component.
///
/// `rr` (multiplicative reduction rate) and `rf` (fixed exit concentration)
/// are mutually exclusive; `lower`/`upper` are the admissible entry range;
/// `given` is the concentration a source injects.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualityAttrs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub given: Option<f64>,
}

impl QualityAttrs {
    pub fn is_empty(&self) -> bool {
        *self == QualityAttrs::default()
    }
}

/// How a component determines its outlet flow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FlowReduction {
    /// Outlet = rate × inlet.
    Rate(f64),
    /// Outlet is fixed whenever the component receives any flow.
    Fixed(f64),
}

/// How a component determines its exit concentration of one pollutant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QualityReduction {
    Rate(f64),
    Fixed(f64),
}

/// Flow, quality, cost and energy attributes. Flows are m³/h.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ComponentAttrs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<f64>,
    /// Fixed flow a provider injects.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supply: Option<f64>,
    /// Minimum flow a receiver must get.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sf: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub quality: BTreeMap<String, QualityAttrs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variable_cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_energy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variable_energy: Option<f64>,
}

impl ComponentAttrs {
    /// The flow reduction in force, if exactly one of SR/SF is set.
    /// Returns `None` when neither or both are present.
    pub fn flow_reduction(&self) -> Option<FlowReduction> {
        match (self.sr, self.sf) {
            (Some(rate), None) => Some(FlowReduction::Rate(rate)),
            (None, Some(fixed)) => Some(FlowReduction::Fixed(fixed)),
            _ => None,
        }
    }

    pub fn quality_of(&self, pollutant: &str) -> Option<&QualityAttrs> {
        self.quality.get(pollutant)
    }

    /// Quality reduction for a pollutant; a missing RR/RF means RR = 1.
    pub fn quality_reduction(&self, pollutant: &str) -> QualityReduction {
        match self.quality.get(pollutant) {
            Some(QualityAttrs { rf: Some(rf), .. }) => QualityReduction::Fixed(*rf),
            Some(QualityAttrs { rr: Some(rr), .. }) => QualityReduction::Rate(*rr),
            _ => QualityReduction::Rate(1.0),
        }
    }

    pub fn given_quality(&self, pollutant: &str) -> Option<f64> {
        self.quality.get(pollutant).and_then(|q| q.given)
    }

    pub fn quality_bounds(&self, pollutant: &str) -> (Option<f64>, Option<f64>) {
        self.quality.get(pollutant).map_or((None, None), |q| (q.lower, q.upper))
    }

    pub fn quality_mut(&mut self, pollutant: &str) -> &mut QualityAttrs {
        self.quality.entry(pollutant.to_string()).or_default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub tag: ComponentTag,
    #[serde(flatten)]
    pub attrs: ComponentAttrs,
}

impl Component {
    pub fn new(tag: ComponentTag) -> Self {
        Component { tag, attrs: ComponentAttrs::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub from: ComponentId,
    pub to: ComponentId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<f64>,
    /// Name of the design option this edge belongs to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub option_group: Option<String>,
}

impl Edge {
    pub fn new(from: impl Into<String>, to: impl Into<String>) -> Self {
        Edge { from: from.into(), to: to.into(), capacity: None, option_group: None }
    }

    pub fn with_capacity(mut self, capacity: f64) -> Self {
        self.capacity = Some(capacity);
        self
    }

    pub fn with_option(mut self, option: impl Into<String>) -> Self {
        self.option_group = Some(option.into());
        self
    }

    pub fn id(&self) -> String {
        edge_id(&self.from, &self.to)
    }
}

pub fn edge_id(from: &str, to: &str) -> String {
    format!("{from}{EDGE_SEPARATOR}{to}")
}

/// Splits `"a->b"` into `("a", "b")`.
pub fn split_edge_id(id: &str) -> Option<(&str, &str)> {
    id.split_once(EDGE_SEPARATOR)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObjectiveKind {
    TotalFlow,
    Cost,
    Energy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    /// Multiplier turning this sense into maximization.
    pub fn sign(self) -> f64 {
        match self {
            Sense::Maximize => 1.0,
            Sense::Minimize => -1.0,
        }
    }

    /// `true` when `a` is strictly better than `b` beyond `tol`.
    pub fn improves(self, a: f64, b: f64, tol: f64) -> bool {
        self.sign() * (a - b) > tol
    }
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Minimize => "Minimize",
            Sense::Maximize => "Maximize",
        })
    }
}

/// What to optimize and over which elements.
///
/// `scope` holds component ids and/or edge ids (`"from->to"`). A component
/// contributes its outflow when it is a provider and its inflow otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Objective {
    pub kind: ObjectiveKind,
    pub sense: Sense,
    pub scope: Vec<String>,
}

impl Objective {
    pub fn new(kind: ObjectiveKind, sense: Sense, scope: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Objective { kind, sense, scope: scope.into_iter().map(Into::into).collect() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Network {
    #[serde(default)]
    pub pollutants: Vec<Pollutant>,
    #[serde(default)]
    pub components: BTreeMap<ComponentId, Component>,
    #[serde(default)]
    pub edges: Vec<Edge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<Objective>,
}

impl Network {
    pub fn new() -> Self {
        Network::default()
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Canonical, byte-stable serialization.
    pub fn to_canonical_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("network serialization is infallible");
        text.push('\n');
        text
    }

    pub fn with_pollutant(mut self, pollutant: Pollutant) -> Self {
        self.pollutants.push(pollutant);
        self
    }

    pub fn add_component(&mut self, id: impl Into<String>, component: Component) -> &mut ComponentAttrs {
        let id = id.into();
        self.components.insert(id.clone(), component);
        &mut self.components.get_mut(&id).expect("just inserted").attrs
    }

    pub fn add_edge(&mut self, edge: Edge) {
        self.edges.push(edge);
    }

    pub fn component(&self, id: &str) -> Option<&Component> {
        self.components.get(id)
    }

    pub fn edge(&self, id: &str) -> Option<&Edge> {
        let (from, to) = split_edge_id(id)?;
        self.edges.iter().find(|e| e.from == from && e.to == to)
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        let (from, to) = split_edge_id(id)?;
        self.edges.iter().position(|e| e.from == from && e.to == to)
    }

    pub fn pollutant_ids(&self) -> impl Iterator<Item = &str> {
        self.pollutants.iter().map(|p| p.id.as_str())
    }

    pub fn in_edges<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.to == id)
    }

    pub fn out_edges<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.from == id)
    }
}

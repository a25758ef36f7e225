//! Synthetic instances: the three case-study layouts with randomized
//! attributes, and the small random families used for testing the solver.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::milp::{ConflictSet, OptionRef};
use crate::network::{Component, ComponentTag, Edge, Network, Objective, ObjectiveKind, Pollutant, Sense};
use crate::scenario::{sample_instance, ParameterSpec, ScenarioError, TrialConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Refinery,
    ChemA,
    ChemB,
}

impl Shape {
    pub const ALL: [Shape; 3] = [Shape::Refinery, Shape::ChemA, Shape::ChemB];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Refinery => "refinery",
            Shape::ChemA => "chem-a",
            Shape::ChemB => "chem-b",
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Shape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Shape::ALL.into_iter().find(|shape| shape.name() == s).ok_or_else(|| format!("unknown shape `{s}` (expected refinery, chem-a or chem-b)"))
    }
}

/// The network as it runs today, or with the candidate design options added.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Current,
    #[default]
    Updated,
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "current" => Ok(Variant::Current),
            "updated" => Ok(Variant::Updated),
            _ => Err(format!("unknown variant `{s}` (expected current or updated)")),
        }
    }
}

/// Small builder to keep the layouts readable.
struct Layout {
    net: Network,
}

impl Layout {
    fn new(pollutants: &[&str]) -> Self {
        let mut net = Network::new();
        for p in pollutants {
            net = net.with_pollutant(Pollutant::new(*p, "mg/L"));
        }
        Layout { net }
    }

    fn node(&mut self, id: &str, tag: ComponentTag) -> &mut crate::network::ComponentAttrs {
        self.net.add_component(id, Component::new(tag))
    }

    fn edge(&mut self, from: &str, to: &str) {
        self.net.add_edge(Edge::new(from, to));
    }

    fn option_edge(&mut self, from: &str, to: &str, option: &str) {
        self.net.add_edge(Edge::new(from, to).with_option(option));
    }

    fn quality(&mut self, id: &str, pollutant: &str) -> &mut crate::network::QualityAttrs {
        self.net.components.get_mut(id).expect("component added first").attrs.quality_mut(pollutant)
    }
}

fn mid(range: (f64, f64)) -> f64 {
    (range.0 + range.1) / 2.0
}

/// Attribute ranges of a shape. Attributes whose target a variant lacks are
/// skipped when sampling.
pub fn shape_specs(shape: Shape) -> Vec<ParameterSpec> {
    ranges(shape).into_iter().map(|(target, attribute, lo, hi)| ParameterSpec::uniform(target, attribute, lo, hi)).collect()
}

type Range = (&'static str, &'static str, f64, f64);

fn ranges(shape: Shape) -> Vec<Range> {
    match shape {
        Shape::Refinery => vec![
            ("T1", "capacity", 300.0, 500.0),
            ("T1", "quality.COD.given", 500.0, 900.0),
            ("T1", "quality.OG.given", 30.0, 80.0),
            ("T2", "capacity", 400.0, 700.0),
            ("T2", "quality.COD.given", 250.0, 650.0),
            ("T2", "quality.OG.given", 15.0, 50.0),
            ("WWS3", "capacity", 200.0, 300.0),
            ("WWS3", "quality.COD.given", 350.0, 650.0),
            ("WWS3", "quality.OG.given", 10.0, 40.0),
            ("Tr1", "sr", 0.85, 0.92),
            ("Tr1", "capacity", 300.0, 400.0),
            ("Tr1", "quality.COD.rr", 0.15, 0.25),
            ("Tr1", "quality.OG.rr", 0.2, 0.4),
            ("Tr2s1", "sr", 0.95, 0.99),
            ("Tr2s1", "capacity", 200.0, 300.0),
            ("Tr2s2", "sr", 0.97, 0.99),
            ("Tr2s2", "capacity", 300.0, 400.0),
            ("Tr2s3", "sr", 0.93, 0.96),
            ("Tr2s3", "capacity", 150.0, 250.0),
            ("Tr3", "sr", 0.95, 0.99),
            ("Tr3", "quality.COD.upper", 500.0, 600.0),
            ("App1", "quality.COD.upper", 60.0, 90.0),
            ("App2", "quality.COD.upper", 120.0, 180.0),
            ("D", "quality.COD.upper", 100.0, 160.0),
            ("D", "capacity", 100.0, 200.0),
        ],
        Shape::ChemA => vec![
            ("FW1", "quality.TDS.given", 200.0, 400.0),
            ("FW1", "quality.TSS.given", 5.0, 20.0),
            ("FW2", "quality.TDS.given", 300.0, 600.0),
            ("FW2", "quality.TSS.given", 10.0, 40.0),
            ("WWS1", "capacity", 20.0, 40.0),
            ("WWS1", "quality.TDS.given", 500.0, 900.0),
            ("WWS1", "quality.TSS.given", 30.0, 60.0),
            ("Tr1", "sr", 0.9, 0.97),
            ("Tr2", "sr", 0.88, 0.95),
            ("Tr3", "sr", 0.9, 0.98),
            ("Tr4", "sr", 0.8, 0.9),
            ("Tr5", "sr", 0.85, 0.95),
            ("Tr7v1", "sr", 0.9, 0.95),
            ("Tr7v2", "sr", 0.75, 0.85),
            ("App1", "demand", 60.0, 100.0),
            ("App2", "demand", 100.0, 160.0),
            ("App1E", "capacity", 30.0, 60.0),
        ],
        Shape::ChemB => vec![
            ("WWS", "supply", 8.0, 12.0),
            ("WWS", "quality.COD.given", 1500.0, 2500.0),
            ("Tr0L", "variable_cost", 1.0, 2.0),
            ("Tr0M", "variable_cost", 2.0, 3.0),
            ("Tr0H", "variable_cost", 3.0, 4.5),
            ("Tr1", "fixed_cost", 40.0, 80.0),
            ("Tr2", "variable_cost", 1.0, 6.0),
            ("Tr3", "fixed_cost", 60.0, 120.0),
            ("FW1", "variable_cost", 0.5, 1.5),
            ("App1", "demand", 2.0, 4.0),
            ("App2", "demand", 60.0, 120.0),
        ],
    }
}

/// The layout of `shape` with every ranged attribute at its midpoint.
pub fn shape_network(shape: Shape, variant: Variant) -> Network {
    let mut net = match shape {
        Shape::Refinery => refinery(variant),
        Shape::ChemA => chem_a(variant),
        Shape::ChemB => chem_b(variant),
    };
    for (target, attribute, _, _) in ranges(shape) {
        if let (Some(c), Some(p)) = (net.components.get_mut(target), attribute.strip_prefix("quality.").and_then(|rest| rest.split('.').next())) {
            c.attrs.quality_mut(p);
        }
    }
    let specs: Vec<ParameterSpec> = ranges(shape).into_iter().map(|(t, a, lo, hi)| ParameterSpec::crisp(t, a, mid((lo, hi)))).collect();
    net = sample_instance(&net, &specs, 0, 0, true).expect("shape layouts are valid");
    net
}

/// One synthetic instance of `shape`: attributes drawn uniformly from the
/// shape's ranges.
pub fn generate(shape: Shape, variant: Variant, seed: u64) -> Result<Network, ScenarioError> {
    sample_instance(&shape_network(shape, variant), &shape_specs(shape), seed, 0, true)
}

/// Trial configuration matching a shape: its ranges, its conflict sets and
/// a small discretization.
pub fn shape_config(shape: Shape) -> TrialConfig {
    let sets: Vec<(&str, Vec<&str>)> = match shape {
        Shape::Refinery => vec![("tr2-setting", vec!["S1", "S2", "S3"]), ("wws3-link", vec!["A", "B"])],
        Shape::ChemA => vec![("wws1-link", vec!["W1", "W2", "W3"]), ("app1-link", vec!["L1", "L2", "L3"]), ("tr7-version", vec!["V1", "V2"])],
        Shape::ChemB => vec![("tr0-level", vec!["LLT", "MLT", "HLT"]), ("secondary", vec!["A", "B", "C"])],
    };
    TrialConfig {
        specs: shape_specs(shape),
        options_compared: sets
            .into_iter()
            .map(|(name, options)| ConflictSet { name: name.into(), options: options.into_iter().map(|o| OptionRef::Label(o.into())).collect() })
            .collect(),
        discretization: 10,
        ..TrialConfig::default()
    }
}

/// The network after committing to `chosen` options: edges of other options
/// are removed, labels are dropped, and components left without edges go.
pub fn implement(net: &Network, chosen: &[&str]) -> Network {
    let mut out = net.clone();
    out.edges.retain(|e| e.option_group.as_deref().is_none_or(|o| chosen.contains(&o)));
    for e in &mut out.edges {
        e.option_group = None;
    }
    let used: BTreeSet<String> = out.edges.iter().flat_map(|e| [e.from.clone(), e.to.clone()]).collect();
    out.components.retain(|id, _| used.contains(id));
    if let Some(objective) = &mut out.objective {
        objective.scope.retain(|s| used.contains(s));
    }
    out
}

fn refinery(variant: Variant) -> Network {
    let mut l = Layout::new(&["COD", "OG"]);
    for id in ["T1", "T2"] {
        l.node(id, ComponentTag::WastewaterSource);
        l.quality(id, "COD").given = Some(0.0);
        l.quality(id, "OG").given = Some(0.0);
    }
    l.node("Tr1", ComponentTag::Treatment);
    l.quality("Tr1", "COD").rr = Some(0.2);
    l.quality("Tr1", "OG").rr = Some(0.3);
    l.node("D", ComponentTag::Discharge);
    l.quality("D", "COD").upper = Some(130.0);
    l.quality("D", "OG").upper = Some(15.0);
    l.edge("T1", "Tr1");
    l.edge("T2", "Tr1");
    l.edge("Tr1", "D");
    if variant == Variant::Current {
        l.net.objective = Some(Objective::new(ObjectiveKind::TotalFlow, Sense::Maximize, ["Tr1"]));
        return l.net;
    }
    l.node("WWS3", ComponentTag::WastewaterSource);
    l.quality("WWS3", "COD").given = Some(0.0);
    l.quality("WWS3", "OG").given = Some(0.0);
    for (id, cod, og) in [("Tr2s1", 0.1, 0.15), ("Tr2s2", 0.3, 0.35), ("Tr2s3", 0.05, 0.1)] {
        l.node(id, ComponentTag::Treatment);
        l.quality(id, "COD").rr = Some(cod);
        l.quality(id, "OG").rr = Some(og);
    }
    l.node("Tr3", ComponentTag::Treatment).capacity = Some(300.0);
    l.quality("Tr3", "COD").rr = Some(0.2);
    l.quality("Tr3", "OG").rr = Some(0.3);
    l.node("Tr4", ComponentTag::Tank).sr = Some(1.0);
    l.node("App1", ComponentTag::Application).capacity = Some(400.0);
    l.quality("App1", "OG").upper = Some(10.0);
    l.node("App2", ComponentTag::Application).capacity = Some(400.0);
    l.quality("App2", "OG").upper = Some(20.0);

    l.edge("T1", "Tr3");
    for (id, option) in [("Tr2s1", "S1"), ("Tr2s2", "S2"), ("Tr2s3", "S3")] {
        l.option_edge("T2", id, option);
        l.option_edge(id, "Tr4", option);
    }
    l.option_edge("WWS3", "Tr3", "A");
    l.option_edge("WWS3", "Tr4", "B");
    l.edge("Tr1", "Tr4");
    l.edge("Tr3", "Tr4");
    for sink in ["App1", "App2", "D"] {
        l.edge("Tr4", sink);
    }
    l.net.objective = Some(Objective::new(ObjectiveKind::TotalFlow, Sense::Maximize, ["Tr1", "Tr2s1", "Tr2s2", "Tr2s3", "Tr3", "App1", "App2"]));
    l.net
}

fn chem_a(variant: Variant) -> Network {
    let mut l = Layout::new(&["TDS", "TSS"]);
    for (id, cap) in [("FW1", 250.0), ("FW2", 250.0)] {
        l.node(id, ComponentTag::FreshWaterSource).capacity = Some(cap);
        l.quality(id, "TDS").given = Some(0.0);
        l.quality(id, "TSS").given = Some(0.0);
    }
    for (id, tds, tss, cap) in [("Tr1", 0.5, 0.3, 120.0), ("Tr2", 0.6, 0.4, 120.0), ("Tr3", 0.4, 0.2, 100.0)] {
        l.node(id, ComponentTag::Treatment).capacity = Some(cap);
        l.quality(id, "TDS").rr = Some(tds);
        l.quality(id, "TSS").rr = Some(tss);
        l.quality(id, "TDS").upper = Some(700.0);
    }
    l.node("Tr4", ComponentTag::Treatment);
    l.quality("Tr4", "TDS").rf = Some(20.0);
    l.quality("Tr4", "TSS").rf = Some(1.0);
    l.node("Tr5", ComponentTag::Treatment);
    l.quality("Tr5", "TDS").rr = Some(0.5);
    l.quality("Tr5", "TSS").rr = Some(0.5);
    l.node("App1", ComponentTag::Application);
    l.quality("App1", "TDS").upper = Some(50.0);
    l.quality("App1", "TSS").upper = Some(3.0);
    l.node("App2", ComponentTag::Application);
    l.quality("App2", "TDS").upper = Some(150.0);
    l.quality("App2", "TSS").upper = Some(10.0);
    for tr in ["Tr1", "Tr2", "Tr3"] {
        l.edge("FW1", tr);
        l.edge("FW2", tr);
    }
    l.edge("Tr1", "Tr4");
    l.edge("Tr2", "Tr4");
    l.edge("Tr2", "Tr5");
    l.edge("Tr3", "Tr5");
    l.edge("Tr4", "App1");
    l.edge("Tr5", "App2");
    if variant == Variant::Updated {
        l.node("WWS1", ComponentTag::WastewaterSource);
        l.quality("WWS1", "TDS").given = Some(0.0);
        l.quality("WWS1", "TSS").given = Some(0.0);
        // Applications cannot send flow, so App1's effluent enters as a source.
        l.node("App1E", ComponentTag::WastewaterSource);
        l.quality("App1E", "TDS").given = Some(60.0);
        l.quality("App1E", "TSS").given = Some(8.0);
        for (id, tds) in [("Tr7v1", 0.8), ("Tr7v2", 0.4)] {
            l.node(id, ComponentTag::Treatment);
            l.quality(id, "TDS").rr = Some(tds);
            l.quality(id, "TSS").rr = Some(tds);
        }
        for (tr, option) in [("Tr1", "W1"), ("Tr2", "W2"), ("Tr3", "W3")] {
            l.option_edge("WWS1", tr, option);
        }
        for (tr, option) in [("Tr1", "L1"), ("Tr2", "L2"), ("Tr3", "L3")] {
            l.option_edge(tr, "App1", option);
        }
        for (tr, option) in [("Tr7v1", "V1"), ("Tr7v2", "V2")] {
            l.option_edge("App1E", tr, option);
            l.option_edge(tr, "App2", option);
        }
    }
    l.net.objective = Some(Objective::new(ObjectiveKind::TotalFlow, Sense::Minimize, ["FW1", "FW2"]));
    l.net
}

fn chem_b(variant: Variant) -> Network {
    let mut l = Layout::new(&["COD"]);
    l.node("WWS", ComponentTag::WastewaterSource);
    l.quality("WWS", "COD").given = Some(0.0);
    l.node("FW1", ComponentTag::FreshWaterSource).capacity = Some(300.0);
    l.quality("FW1", "COD").given = Some(5.0);
    l.node("App1", ComponentTag::Application);
    l.quality("App1", "COD").upper = Some(10.0);
    l.node("App2", ComponentTag::Application);
    l.quality("App2", "COD").upper = Some(60.0);
    l.edge("FW1", "App1");
    l.edge("FW1", "App2");
    if variant == Variant::Current {
        l.node("D", ComponentTag::Discharge);
        l.edge("WWS", "D");
        l.net.objective = Some(Objective::new(ObjectiveKind::Cost, Sense::Minimize, ["FW1"]));
        return l.net;
    }
    for (id, rr, option) in [("Tr0L", 0.3, "LLT"), ("Tr0M", 0.15, "MLT"), ("Tr0H", 0.05, "HLT")] {
        l.node(id, ComponentTag::Treatment).sr = Some(1.0);
        l.quality(id, "COD").rr = Some(rr);
        l.option_edge("WWS", id, option);
        l.option_edge(id, "Hub", option);
    }
    l.node("Hub", ComponentTag::Tank).sr = Some(1.0);
    // Actor A returns a set flow at a set quality for a flat fee.
    let a = l.node("Tr1", ComponentTag::Treatment);
    a.sf = Some(8.0);
    l.quality("Tr1", "COD").rf = Some(8.0);
    l.quality("Tr1", "COD").upper = Some(600.0);
    l.node("Tr2", ComponentTag::Treatment).sr = Some(0.95);
    l.quality("Tr2", "COD").rr = Some(0.1);
    l.quality("Tr2", "COD").upper = Some(400.0);
    l.node("Tr3", ComponentTag::Tank).sr = Some(1.0);
    l.quality("Tr3", "COD").upper = Some(40.0);
    for (tr, option) in [("Tr1", "A"), ("Tr2", "B"), ("Tr3", "C")] {
        l.option_edge("Hub", tr, option);
        l.option_edge(tr, "App2", option);
    }
    l.option_edge("Tr1", "App1", "A");
    l.option_edge("FW1", "Tr3", "C");
    l.net.objective = Some(Objective::new(ObjectiveKind::Cost, Sense::Minimize, ["Tr0L", "Tr0M", "Tr0H", "Tr1", "Tr2", "Tr3", "FW1"]));
    l.net
}

/// A random layered instance with at most ten components and at most two
/// blending points, none with more than two inflows.
pub fn random_network(seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        if let Some(net) = try_random(&mut rng) {
            return net;
        }
    }
}

fn try_random(rng: &mut ChaCha8Rng) -> Option<Network> {
    let pollutants: Vec<&str> = if rng.random_bool(0.5) { vec!["P1"] } else { vec!["P1", "P2"] };
    let mut l = Layout::new(&pollutants);
    let n_src = rng.random_range(2..=3);
    let n_mid = rng.random_range(1..=3);
    let n_app = rng.random_range(1..=2);
    let sources: Vec<String> = (1..=n_src).map(|i| format!("S{i}")).collect();
    let mids: Vec<String> = (1..=n_mid).map(|i| format!("T{i}")).collect();
    let apps: Vec<String> = (1..=n_app).map(|i| format!("A{i}")).collect();

    let mut fresh = Vec::new();
    for (i, s) in sources.iter().enumerate() {
        let is_fresh = i == 0 && rng.random_bool(0.6);
        let attrs = l.node(s, if is_fresh { ComponentTag::FreshWaterSource } else { ComponentTag::WastewaterSource });
        if !is_fresh && rng.random_bool(0.5) {
            attrs.supply = Some(rng.random_range(5..=30) as f64);
        } else {
            attrs.capacity = Some(rng.random_range(5..=40) as f64);
        }
        if is_fresh {
            fresh.push(s.clone());
        }
        for p in &pollutants {
            let c = if is_fresh { rng.random_range(0..=10) } else { rng.random_range(20..=200) };
            l.quality(s, p).given = Some(c as f64);
        }
    }
    for t in &mids {
        if rng.random_bool(0.25) {
            l.node(t, ComponentTag::Tank).sr = Some(1.0);
            continue;
        }
        let attrs = l.node(t, ComponentTag::Treatment);
        if rng.random_bool(0.15) {
            attrs.sf = Some(rng.random_range(1..=5) as f64);
        } else {
            attrs.sr = Some(*[0.8, 0.9, 1.0].choose(rng).expect("non-empty"));
        }
        if rng.random_bool(0.4) {
            attrs.capacity = Some(rng.random_range(20..=60) as f64);
        }
        attrs.variable_cost = Some(rng.random_range(1..=5) as f64);
        attrs.fixed_cost = Some(rng.random_range(0..=10) as f64);
        for p in &pollutants {
            let rf = rng.random_bool(0.2);
            let q = l.quality(t, p);
            if rf {
                q.rf = Some(*[5.0, 10.0].choose(rng).expect("non-empty"));
            } else {
                q.rr = Some(*[0.1, 0.2, 0.5].choose(rng).expect("non-empty"));
            }
            if rng.random_bool(0.3) {
                l.quality(t, p).upper = Some(150.0);
            }
        }
    }
    for a in &apps {
        let attrs = l.node(a, ComponentTag::Application);
        if rng.random_bool(0.5) {
            attrs.capacity = Some(rng.random_range(10..=50) as f64);
        }
        if rng.random_bool(0.2) {
            attrs.demand = Some(rng.random_range(1..=5) as f64);
        }
        for p in &pollutants {
            l.quality(a, p).upper = Some(rng.random_range(10..=80) as f64);
        }
    }
    l.node("D", ComponentTag::Discharge);
    if rng.random_bool(0.3) {
        for p in &pollutants {
            l.quality("D", p).upper = Some(rng.random_range(50..=150) as f64);
        }
    }

    let mut order: Vec<String> = sources.clone();
    order.extend(mids.iter().cloned());
    let mut edges: BTreeSet<(String, String)> = BTreeSet::new();
    for (i, t) in mids.iter().enumerate() {
        let preds = &order[..n_src + i];
        let n_in = rng.random_range(1..=2);
        for from in preds.choose_multiple(rng, n_in) {
            edges.insert((from.clone(), t.clone()));
        }
    }
    for a in &apps {
        let n_in = rng.random_range(1..=2);
        for from in order.choose_multiple(rng, n_in) {
            edges.insert((from.clone(), a.clone()));
        }
    }
    let mut sinks: Vec<String> = apps.clone();
    sinks.push("D".into());
    // Every source and intermediate needs somewhere to send water.
    for (i, v) in order.iter().enumerate() {
        if !edges.iter().any(|(from, _)| from == v) {
            let mut later: Vec<String> = order[(i + 1).max(n_src)..].to_vec();
            later.extend(sinks.iter().cloned());
            later.retain(|w| edges.iter().filter(|(_, to)| to == w).count() < 2);
            let to = later.choose(rng).cloned().unwrap_or_else(|| "D".into());
            edges.insert((v.clone(), to));
        }
    }
    if !edges.iter().any(|(_, to)| to == "D") {
        edges.insert((order.last().expect("non-empty").clone(), "D".into()));
    }
    let mut inflows = std::collections::BTreeMap::<&str, usize>::new();
    for (_, to) in &edges {
        *inflows.entry(to.as_str()).or_default() += 1;
    }
    if inflows.values().any(|&n| n > 2) || inflows.values().filter(|&&n| n == 2).count() > 2 {
        return None;
    }
    for (from, to) in &edges {
        l.edge(from, to);
    }

    let used_apps: Vec<&String> = apps.iter().filter(|a| inflows.contains_key(a.as_str())).collect();
    let objective = match rng.random_range(0..3) {
        0 if !fresh.is_empty() => Objective::new(ObjectiveKind::TotalFlow, Sense::Minimize, fresh.clone()),
        1 => Objective::new(ObjectiveKind::Cost, Sense::Minimize, mids.clone()),
        _ if !used_apps.is_empty() => Objective::new(ObjectiveKind::TotalFlow, Sense::Maximize, used_apps),
        _ => Objective::new(ObjectiveKind::TotalFlow, Sense::Maximize, ["D"]),
    };
    l.net.objective = Some(objective);
    // A minimized objective over components without costs is empty.
    if l.net.objective.as_ref().is_some_and(|o| o.kind == ObjectiveKind::Cost) && !mids.iter().any(|t| l.net.components[t].attrs.variable_cost.is_some()) {
        return None;
    }
    Some(l.net)
}

/// A blending instance whose optimum sits on the share lattice of `k`.
///
/// Two sources with fixed supplies feed an application `M` and a discharge
/// `D`. `M`'s entry limit is placed exactly at a lattice share, so the
/// discretized optimum equals the continuous one. Some instances put a
/// treatment `T` between the dirty source and `M`.
pub fn tiny_blend(seed: u64, k: u32) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = k.max(2);
    let share = rng.random_range(1..k) as f64;
    let m = rng.random_range(1..=3) as f64;
    let clean_flow = (k as f64 - share) * m;
    let dirty_flow = share * m;
    let treated = rng.random_bool(0.5);
    let rr = if treated { 0.5 } else { 1.0 };

    let c2 = rng.random_range(0..=20) as f64;
    // Effective dirty concentration at M is a multiple of K above c2.
    let step = rng.random_range(1..=5) as f64;
    let c1_eff = c2 + step * k as f64;
    let u = c2 + share * step;

    let mut l = Layout::new(&["P"]);
    l.node("S1", ComponentTag::WastewaterSource).supply = Some(dirty_flow + rng.random_range(1..=10) as f64);
    l.quality("S1", "P").given = Some(c1_eff / rr);
    l.node("S2", ComponentTag::WastewaterSource).supply = Some(clean_flow);
    l.quality("S2", "P").given = Some(c2);
    l.node("M", ComponentTag::Application);
    l.quality("M", "P").upper = Some(u);
    l.node("D", ComponentTag::Discharge);
    if treated {
        l.node("T", ComponentTag::Treatment).sr = Some(1.0);
        l.quality("T", "P").rr = Some(rr);
        l.edge("S1", "T");
        l.edge("T", "M");
    } else {
        l.edge("S1", "M");
    }
    l.edge("S1", "D");
    l.edge("S2", "M");
    l.net.objective = Some(if rng.random_bool(0.5) {
        Objective::new(ObjectiveKind::TotalFlow, Sense::Maximize, ["M"])
    } else {
        Objective::new(ObjectiveKind::TotalFlow, Sense::Minimize, ["D"])
    });
    l.net
}

/// A component `M` with three or four inflows whose optimal mix sits on the
/// lattice of `K = 10` at every stage of the pairwise split.
///
/// The clean sources `S1..` each send a fixed supply along a single edge;
/// the last source is dirty, may also discharge to `D`, and `M`'s limit is
/// set so that its optimal flow is the designed one.
pub fn multi_inflow(seed: u64) -> Network {
    const DESIGNS: [&[u32]; 6] = [&[1, 4, 5], &[2, 3, 5], &[1, 1, 8], &[1, 1, 3, 5], &[2, 2, 1, 5], &[1, 1, 2, 6]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let design = *DESIGNS.choose(&mut rng).expect("non-empty");
    let scale = rng.random_range(1..=3) as f64;
    let mut l = Layout::new(&["P"]);
    l.node("M", ComponentTag::Application);
    l.node("D", ComponentTag::Discharge);
    let n = design.len();
    let mut load = 0.0;
    let mut total = 0.0;
    for (i, &parts) in design.iter().enumerate() {
        let id = format!("S{}", i + 1);
        let flow = parts as f64 * scale;
        let c = if i + 1 == n { rng.random_range(100..=200) } else { rng.random_range(0..=40) } as f64;
        let supply = if i + 1 == n { flow + rng.random_range(1..=10) as f64 } else { flow };
        l.node(&id, ComponentTag::WastewaterSource).supply = Some(supply);
        l.quality(&id, "P").given = Some(c);
        l.edge(&id, "M");
        if i + 1 == n {
            l.edge(&id, "D");
        }
        load += flow * c;
        total += flow;
    }
    l.quality("M", "P").upper = Some(load / total);
    l.net.objective = Some(Objective::new(ObjectiveKind::TotalFlow, Sense::Maximize, ["M"]));
    l.net
}

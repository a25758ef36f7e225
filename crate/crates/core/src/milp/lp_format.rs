//! CPLEX-style LP text format.
//!
//! [`write_lp`] is deterministic: rows are sorted by tag, then element,
//! then emission order, and numbers use Rust's shortest round-trip
//! formatting, so writing the same model twice yields identical bytes.
//! [`parse_lp`] reads the subset of the format that the writer produces
//! plus common variants (continuation lines, `free` bounds, `=<`).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::{MilpModel, Relation, Row, RowTag, VarKind, VarRole, Variable};
use crate::network::Sense;

const TERMS_PER_LINE: usize = 8;

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct LpParseError {
    pub line: usize,
    pub message: String,
}

fn describe(role: &VarRole) -> String {
    match role {
        VarRole::Flow { edge } => format!("flow on {edge}"),
        VarRole::Quality { component, pollutant } => format!("exit concentration of {pollutant} at {component}"),
        VarRole::Active { edge } => format!("edge {edge} in use"),
        VarRole::BlendPart { component, parts } => format!("first inflow of {component} takes {parts} parts"),
        VarRole::Option { name } => format!("option {name} selected"),
        VarRole::Unknown => "imported".to_string(),
    }
}

fn write_terms(out: &mut String, vars: &[Variable], terms: &[(usize, f64)]) {
    if terms.is_empty() {
        out.push_str(" 0 ");
        out.push_str(&vars.first().map_or("x".to_string(), |v| v.name.clone()));
        return;
    }
    for (i, &(v, a)) in terms.iter().enumerate() {
        if i > 0 && i % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if a < 0.0 { '-' } else { '+' };
        if i == 0 && sign == '+' {
            let _ = write!(out, " {} {}", a.abs(), vars[v].name);
        } else {
            let _ = write!(out, " {sign} {} {}", a.abs(), vars[v].name);
        }
    }
}

/// Row names in export order, paired with the row index.
pub fn ordered_rows(model: &MilpModel) -> Vec<(String, usize)> {
    let mut order: Vec<usize> = (0..model.rows.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&model.rows[a], &model.rows[b]);
        (ra.tag, &ra.element, a).cmp(&(rb.tag, &rb.element, b))
    });
    let mut seq: BTreeMap<String, usize> = BTreeMap::new();
    order
        .into_iter()
        .map(|r| {
            let row = &model.rows[r];
            let stem = format!("{}_{}", row.tag.name(), sanitize(&row.element));
            let n = seq.entry(stem.clone()).or_insert(0);
            let name = format!("{stem}_{n}");
            *n += 1;
            (name, r)
        })
        .collect()
}

fn sanitize(raw: &str) -> String {
    raw.chars().map(|ch| if ch.is_ascii_alphanumeric() || ch == '_' { ch } else { '_' }).collect()
}

pub fn write_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    out.push_str("\\ water network model\n");
    let _ = writeln!(out, "\\ discretization K = {}, mu = {}", model.discretization, model.mu);
    for var in &model.vars {
        let _ = writeln!(out, "\\ {} : {}", var.name, describe(&var.role));
    }
    out.push_str(match model.sense {
        Sense::Maximize => "Maximize\n",
        Sense::Minimize => "Minimize\n",
    });
    out.push_str(" obj:");
    write_terms(&mut out, &model.vars, &model.objective);
    out.push_str("\nSubject To\n");
    for (name, r) in ordered_rows(model) {
        let row = &model.rows[r];
        let _ = write!(out, " {name}:");
        write_terms(&mut out, &model.vars, &row.terms);
        let _ = writeln!(out, " {} {}", row.relation.symbol(), row.rhs);
    }
    out.push_str("Bounds\n");
    for var in model.vars.iter().filter(|v| v.kind == VarKind::Continuous) {
        if var.lower == var.upper {
            let _ = writeln!(out, " {} = {}", var.name, var.lower);
        } else if var.upper.is_infinite() {
            let _ = writeln!(out, " {} >= {}", var.name, var.lower);
        } else {
            let _ = writeln!(out, " {} <= {} <= {}", var.lower, var.name, var.upper);
        }
    }
    let binaries: Vec<&str> = model.vars.iter().filter(|v| v.kind == VarKind::Binary).map(|v| v.name.as_str()).collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for chunk in binaries.chunks(TERMS_PER_LINE) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    Generals,
}

fn section_of(line: &str) -> Option<Section> {
    match line.to_ascii_lowercase().as_str() {
        "maximize" | "maximise" | "max" | "minimize" | "minimise" | "min" => Some(Section::Objective),
        "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
        "bounds" | "bound" => Some(Section::Bounds),
        "binaries" | "binary" | "bin" => Some(Section::Binaries),
        "generals" | "general" | "gen" | "integers" => Some(Section::Generals),
        "end" => Some(Section::None),
        _ => None,
    }
}

fn parse_number(token: &str) -> Option<f64> {
    match token.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        t => t.parse().ok(),
    }
}

fn parse_relation(token: &str) -> Option<Relation> {
    match token {
        "<=" | "=<" | "<" => Some(Relation::Le),
        ">=" | "=>" | ">" => Some(Relation::Ge),
        "=" => Some(Relation::Eq),
        _ => None,
    }
}

struct Parser {
    model: MilpModel,
    index: BTreeMap<String, usize>,
}

impl Parser {
    fn var(&mut self, name: &str) -> usize {
        if let Some(&v) = self.index.get(name) {
            return v;
        }
        self.model.vars.push(Variable { name: name.into(), kind: VarKind::Continuous, lower: 0.0, upper: f64::INFINITY, role: VarRole::Unknown });
        self.index.insert(name.into(), self.model.vars.len() - 1);
        self.model.vars.len() - 1
    }

    /// Parses `[+|-] [coef] name ...` into terms, merging repeated names.
    fn terms(&mut self, tokens: &[(usize, String)]) -> Result<Vec<(usize, f64)>, LpParseError> {
        let mut terms: Vec<(usize, f64)> = Vec::new();
        let mut sign = 1.0;
        let mut coef: Option<f64> = None;
        for (line, tok) in tokens {
            match tok.as_str() {
                "+" => sign = 1.0,
                "-" => sign = -sign,
                t => {
                    if let Some(value) = parse_number(t) {
                        if coef.is_some() {
                            return Err(LpParseError { line: *line, message: format!("unexpected number `{t}`") });
                        }
                        coef = Some(value);
                    } else {
                        let (glued, name) = match split_coefficient(t) {
                            Some((value, name)) if coef.is_none() => (value, name),
                            _ => (1.0, t),
                        };
                        let v = self.var(name);
                        let a = sign * glued * coef.take().unwrap_or(1.0);
                        match terms.iter_mut().find(|(w, _)| *w == v) {
                            Some(term) => term.1 += a,
                            None => terms.push((v, a)),
                        }
                        sign = 1.0;
                    }
                }
            }
        }
        if coef.is_some() {
            let line = tokens.last().map_or(0, |t| t.0);
            return Err(LpParseError { line, message: "constant terms are not supported".into() });
        }
        Ok(terms)
    }
}

fn is_exponent_sign(chars: &[char], i: usize) -> bool {
    i >= 2 && matches!(chars[i - 1], 'e' | 'E') && chars[i - 2].is_ascii_digit() && chars.get(i + 1).is_some_and(|c| c.is_ascii_digit())
}

/// Splits a glued coefficient such as `2.5x` into `(2.5, "x")`.
fn split_coefficient(token: &str) -> Option<(f64, &str)> {
    (1..token.len()).rev().filter(|&i| token.is_char_boundary(i)).find_map(|i| {
        let (num, name) = token.split_at(i);
        let starts_name = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
        match (starts_name, num.parse::<f64>()) {
            (true, Ok(value)) => Some((value, name)),
            _ => None,
        }
    })
}

/// Splits `a:b<=c` style glued tokens into separate tokens.
fn tokenize(line: &str) -> Vec<String> {
    let mut spaced = String::with_capacity(line.len() + 8);
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        let next = chars.get(i + 1).copied();
        match (ch, next) {
            ('<' | '>' | '=', Some('=' | '<' | '>')) => {
                let _ = write!(spaced, " {ch}{} ", next.unwrap());
                i += 2;
                continue;
            }
            ('<' | '>' | '=', _) => {
                let _ = write!(spaced, " {ch} ");
            }
            (':', _) => spaced.push_str(" : "),
            ('+' | '-', _) if !is_exponent_sign(&chars, i) => {
                let _ = write!(spaced, " {ch} ");
            }
            _ => spaced.push(ch),
        }
        i += 1;
    }
    spaced.split_whitespace().map(str::to_string).collect()
}

pub fn parse_lp(text: &str) -> Result<MilpModel, LpParseError> {
    let mut parser = Parser { model: MilpModel::empty(Sense::Minimize), index: BTreeMap::new() };
    let mut section = Section::None;
    let mut pending: Vec<(usize, String)> = Vec::new();
    let mut objective_tokens: Vec<(usize, String)> = Vec::new();
    let mut seen_end = false;

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('\\').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(next) = section_of(line) {
            if section == Section::Constraints && !pending.is_empty() {
                return Err(LpParseError { line: line_no, message: "incomplete constraint".into() });
            }
            if next == Section::Objective {
                parser.model.sense = if line.to_ascii_lowercase().starts_with("max") { Sense::Maximize } else { Sense::Minimize };
            }
            if next == Section::None {
                seen_end = true;
            }
            section = next;
            continue;
        }
        let tokens = tokenize(line);
        match section {
            Section::None => return Err(LpParseError { line: line_no, message: format!("unexpected text `{line}`") }),
            Section::Objective => objective_tokens.extend(tokens.into_iter().map(|t| (line_no, t))),
            Section::Constraints => {
                pending.extend(tokens.into_iter().map(|t| (line_no, t)));
                // A constraint is complete once a relation is followed by its right-hand side.
                if let Some(pos) = pending.iter().position(|(_, t)| parse_relation(t).is_some()) {
                    if pending.len() > pos + 1 {
                        let rhs_tokens: Vec<&str> = pending[pos + 1..].iter().map(|(_, t)| t.as_str()).collect();
                        let rhs_text = rhs_tokens.concat();
                        let rhs = parse_number(&rhs_text)
                            .ok_or_else(|| LpParseError { line: line_no, message: format!("bad right-hand side `{rhs_text}`") })?;
                        let relation = parse_relation(&pending[pos].1).expect("checked above");
                        let (name, body) = match pending.get(1) {
                            Some((_, colon)) if colon == ":" => (pending[0].1.clone(), &pending[2..pos]),
                            _ => (format!("R{}", parser.model.rows.len()), &pending[..pos]),
                        };
                        let body = body.to_vec();
                        let terms = parser.terms(&body)?;
                        parser.model.rows.push(Row { tag: RowTag::Imported, element: name, terms, relation, rhs });
                        pending.clear();
                    }
                }
            }
            Section::Bounds => parse_bound(&mut parser, &tokens, line_no)?,
            Section::Binaries => {
                for name in tokens {
                    let v = parser.var(&name);
                    let var = &mut parser.model.vars[v];
                    var.kind = VarKind::Binary;
                    var.lower = var.lower.max(0.0);
                    var.upper = var.upper.min(1.0);
                }
            }
            Section::Generals => {
                return Err(LpParseError { line: line_no, message: "general integer variables are not supported".into() });
            }
        }
    }
    if !seen_end {
        return Err(LpParseError { line: text.lines().count(), message: "missing `End`".into() });
    }
    let body: Vec<(usize, String)> = match objective_tokens.get(1) {
        Some((_, colon)) if colon == ":" => objective_tokens[2..].to_vec(),
        _ => objective_tokens,
    };
    parser.model.objective = parser.terms(&body)?.into_iter().filter(|&(_, a)| a != 0.0).collect();
    Ok(parser.model)
}

fn parse_bound(parser: &mut Parser, tokens: &[String], line: usize) -> Result<(), LpParseError> {
    let bad = || LpParseError { line, message: format!("cannot read bound `{}`", tokens.join(" ")) };
    let num = |t: &str| parse_number(t).ok_or_else(bad);
    match tokens {
        [name, free] if free.eq_ignore_ascii_case("free") => {
            let v = parser.var(name);
            parser.model.vars[v].lower = f64::NEG_INFINITY;
            parser.model.vars[v].upper = f64::INFINITY;
        }
        [lo, r1, name, r2, hi] if parse_relation(r1) == Some(Relation::Le) && parse_relation(r2) == Some(Relation::Le) => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let v = parser.var(name);
            parser.model.vars[v].lower = lo;
            parser.model.vars[v].upper = hi;
        }
        [a, rel, b] => {
            let rel = parse_relation(rel).ok_or_else(bad)?;
            // Either `name rel value` or `value rel name`.
            let (name, value, rel) = match parse_number(a) {
                Some(value) => (b, value, match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                }),
                None => (a, num(b)?, rel),
            };
            let v = parser.var(name);
            let var = &mut parser.model.vars[v];
            match rel {
                Relation::Le => var.upper = value,
                Relation::Ge => var.lower = value,
                Relation::Eq => {
                    var.lower = value;
                    var.upper = value;
                }
            }
        }
        _ => return Err(bad()),
    }
    Ok(())
}

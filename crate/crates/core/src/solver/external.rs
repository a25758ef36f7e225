//! External solver exchange through LP and plain-text solution files.
//!
//! The command template may use `{model}`, `{solution}`, `{gap}` and
//! `{time}`; it runs under `sh -c`. The solution file holds optional
//! `status`, `objective` and `gap` header lines followed by `<name> <value>`
//! pairs. CBC's solution format is accepted as well.

use std::process::Command;
use std::time::Instant;

use super::{MilpSolution, SolveError, SolveLimits};
use crate::milp::{lp_format, MilpModel};
use crate::solution::SolveStatus;

pub const SOLVER_CMD_ENV: &str = "SOLVER_CMD";

fn quote(path: &std::path::Path) -> String {
    format!("'{}'", path.display().to_string().replace('\'', r"'\''"))
}

pub fn solve_external(model: &MilpModel, limits: &SolveLimits, command: &str) -> Result<MilpSolution, SolveError> {
    if command.trim().is_empty() {
        return Err(SolveError::MissingSolver);
    }
    let started = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| SolveError::Io(e.to_string()))?;
    let model_path = dir.path().join("model.lp");
    let solution_path = dir.path().join("model.sol");
    std::fs::write(&model_path, lp_format::write_lp(model)).map_err(|e| SolveError::Io(e.to_string()))?;

    let line = command
        .replace("{model}", &quote(&model_path))
        .replace("{solution}", &quote(&solution_path))
        .replace("{gap}", &limits.max_gap.to_string())
        .replace("{time}", &limits.max_time.to_string());
    log::debug!("running external solver: {line}");
    let output = Command::new("sh").arg("-c").arg(&line).output().map_err(|e| SolveError::Io(e.to_string()))?;
    let log = format!("{}{}", String::from_utf8_lossy(&output.stdout), String::from_utf8_lossy(&output.stderr));
    if output.status.code() == Some(127) {
        return Err(SolveError::MissingSolver);
    }
    if !output.status.success() {
        return Err(SolveError::SolverCrash { log });
    }
    let text = std::fs::read_to_string(&solution_path)
        .map_err(|e| SolveError::SolverCrash { log: format!("{log}\nno solution file: {e}") })?;
    let mut solution = parse_solution_file(&text, model)?;
    solution.solve_time = started.elapsed();
    Ok(solution)
}

fn parse_status(word: &str) -> Option<SolveStatus> {
    match word.to_ascii_lowercase().as_str() {
        "optimal" => Some(SolveStatus::Optimal),
        "feasiblewithingap" | "feasible" => Some(SolveStatus::FeasibleWithinGap),
        "infeasible" => Some(SolveStatus::Infeasible),
        "timedout" | "stopped" => Some(SolveStatus::TimedOut),
        "unbounded" => Some(SolveStatus::Unbounded),
        _ => None,
    }
}

fn number(token: &str, line: usize) -> Result<f64, SolveError> {
    token.parse().map_err(|_| SolveError::ParseError { line, message: format!("expected a number, found `{token}`") })
}

/// Reads a solution file against the variables of `model`.
pub fn parse_solution_file(text: &str, model: &MilpModel) -> Result<MilpSolution, SolveError> {
    let mut status = None;
    let mut objective = None;
    let mut gap = None;
    let mut values = vec![0.0; model.vars.len()];
    let mut seen = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        match tokens.as_slice() {
            [] => {}
            [first, ..] if first.starts_with('#') => {}
            ["status", word] => {
                status = Some(parse_status(word).ok_or_else(|| SolveError::ParseError { line, message: format!("unknown status `{word}`") })?);
            }
            ["objective", v] => objective = Some(number(v, line)?),
            ["gap", v] => gap = Some(number(v, line)?),
            // CBC header, e.g. "Optimal - objective value 5.0"
            [word, "-", "objective", "value", v] if line == 1 => {
                status = parse_status(word);
                objective = Some(number(v, line)?);
            }
            [word, ..] if line == 1 && parse_status(word).is_some() && tokens.len() > 2 => {
                status = parse_status(word);
            }
            [name, v] | [_, name, v, _] => {
                let index = model
                    .var_index(name)
                    .ok_or_else(|| SolveError::ParseError { line, message: format!("unknown variable `{name}`") })?;
                values[index] = number(v, line)?;
                seen = true;
            }
            _ => return Err(SolveError::ParseError { line, message: format!("unrecognized line `{raw}`") }),
        }
    }
    let status = status
        .or(if seen { Some(SolveStatus::Optimal) } else { None })
        .ok_or(SolveError::ParseError { line: 1, message: "no status and no values".into() })?;
    if !status.has_solution() && !seen {
        return Ok(MilpSolution { gap, ..MilpSolution::without_values(status) });
    }
    let objective = objective.or_else(|| Some(model.objective_value(&values)));
    let gap = gap.or(if status == SolveStatus::Optimal { Some(0.0) } else { None });
    Ok(MilpSolution { status, values, objective, gap, nodes: 0, solve_time: Default::default() })
}

/// Renders a solution in the format read by [`parse_solution_file`].
pub fn write_solution_file(solution: &MilpSolution, model: &MilpModel) -> String {
    let mut out = format!("status {:?}\n", solution.status);
    if let Some(objective) = solution.objective {
        out.push_str(&format!("objective {objective}\n"));
    }
    if let Some(gap) = solution.gap {
        out.push_str(&format!("gap {gap}\n"));
    }
    for (var, value) in model.vars.iter().zip(&solution.values) {
        out.push_str(&format!("{} {}\n", var.name, value));
    }
    out
}

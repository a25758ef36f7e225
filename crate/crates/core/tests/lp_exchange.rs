use std::collections::BTreeMap;

use waternet::engine::prepare;
use waternet::gen::random_network;
use waternet::milp::lp_format::{parse_lp, write_lp};
use waternet::milp::{BuildOptions, MilpModel};
use waternet::solution::SolveStatus;
use waternet::solver::{solve_exact, solve_external, write_solution_file, SolveError, SolveLimits};

fn model(seed: u64) -> MilpModel {
    prepare(&random_network(seed), &BuildOptions::with_k(4)).unwrap().1
}

/// Variables, objective and rows by name, independent of order and roles.
fn content(m: &MilpModel) -> (BTreeMap<String, String>, BTreeMap<String, f64>, Vec<String>) {
    let name = |v: usize| m.vars[v].name.clone();
    let vars = m.vars.iter().map(|v| (v.name.clone(), format!("{:?} {} {}", v.kind, v.lower, v.upper))).collect();
    let objective = m.objective.iter().map(|&(v, a)| (name(v), a)).collect();
    let mut rows: Vec<String> = m
        .rows
        .iter()
        .map(|r| {
            // `+ 0.0` folds negative zero, which the text cannot carry.
            let mut terms: Vec<(String, f64)> = r.terms.iter().map(|&(v, a)| (name(v), a + 0.0)).collect();
            terms.sort_by(|a, b| a.0.cmp(&b.0));
            format!("{terms:?} {:?} {}", r.relation, r.rhs + 0.0)
        })
        .collect();
    rows.sort();
    (vars, objective, rows)
}

#[test]
fn parsing_recovers_the_written_model() {
    for seed in 0..30 {
        let original = model(seed);
        let text = write_lp(&original);
        assert_eq!(text, write_lp(&model(seed)), "seed {seed}");
        let parsed = parse_lp(&text).unwrap();
        assert_eq!(parsed.sense, original.sense);
        let (a, b) = (content(&parsed), content(&original));
        assert_eq!(a, b, "seed {seed}");
        assert_eq!(content(&parse_lp(&write_lp(&parsed)).unwrap()), content(&original), "seed {seed}");
    }
}

#[test]
fn parsed_models_have_the_same_optimum() {
    let mut compared = 0;
    for seed in 0..30 {
        let original = model(seed);
        let parsed = parse_lp(&write_lp(&original)).unwrap();
        let a = solve_exact(&original, &SolveLimits::exact()).unwrap();
        let b = solve_exact(&parsed, &SolveLimits::exact()).unwrap();
        assert_eq!(a.status, b.status, "seed {seed}");
        if a.status == SolveStatus::Optimal {
            let (x, y) = (a.objective.unwrap(), b.objective.unwrap());
            assert!((x - y).abs() <= 1e-6 * x.abs().max(1.0), "seed {seed}: {x} vs {y}");
            compared += 1;
        }
    }
    assert!(compared >= 10);
}

#[test]
fn external_exchange_reads_back_the_values() {
    let model = model(3);
    let solved = solve_exact(&model, &SolveLimits::exact()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let prepared = dir.path().join("answer.sol");
    std::fs::write(&prepared, write_solution_file(&solved, &model)).unwrap();
    let command = format!("test -s {{model}} && cp '{}' {{solution}}", prepared.display());
    let read = solve_external(&model, &SolveLimits::exact(), &command).unwrap();
    assert_eq!(read.status, solved.status);
    assert_eq!(read.values, solved.values);
    assert_eq!(read.objective, solved.objective);
}

#[test]
fn external_failures_are_reported() {
    let model = model(3);
    let limits = SolveLimits::exact();
    assert!(matches!(solve_external(&model, &limits, ""), Err(SolveError::MissingSolver)));
    assert!(matches!(solve_external(&model, &limits, "definitely-not-a-solver-binary {model}"), Err(SolveError::MissingSolver)));
    assert!(matches!(solve_external(&model, &limits, "echo boom >&2; exit 4"), Err(SolveError::SolverCrash { log }) if log.contains("boom")));
    assert!(matches!(solve_external(&model, &limits, "true"), Err(SolveError::SolverCrash { .. })));
    assert!(matches!(solve_external(&model, &limits, "echo 'nonsense here please' > {solution}"), Err(SolveError::ParseError { .. })));
}

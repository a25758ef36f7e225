use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use waternet::gen::tiny_blend;
use waternet::network::{Edge, Network};

fn waternet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_waternet")).args(args).env_remove("SOLVER_CMD").output().unwrap()
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn json(output: &Output) -> Value {
    serde_json::from_slice(&output.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&output.stderr)))
}

fn code(output: &Output) -> i32 {
    output.status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn arg(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generated_chem_a_optimizes_and_checks() {
    let dir = tempfile::tempdir().unwrap();
    let gen = waternet(&["gen", "--shape", "chem-a", "--seed", "1", "--variant", "current"]);
    assert_eq!(code(&gen), 0);
    let net = write(dir.path(), "net.json", &stdout(&gen));
    assert_eq!(code(&waternet(&["validate", arg(&net)])), 0);

    let out = waternet(&["optimize", arg(&net), "--objective", "total-flow", "--sense", "minimize", "--scope", "FW1,FW2", "--K", "10"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let solution = json(&out);
    assert_eq!(solution["status"], "Optimal");
    let intake: f64 = solution["flows"].as_object().unwrap().iter().filter(|(e, _)| e.starts_with("FW")).map(|(_, f)| f.as_f64().unwrap()).sum();
    assert!((intake - solution["objective_value"].as_f64().unwrap()).abs() < 1e-6);

    let sol = write(dir.path(), "net.sol.json", &stdout(&out));
    let checked = waternet(&["check", arg(&net), arg(&sol)]);
    assert_eq!(code(&checked), 0, "{}", stdout(&checked));
    assert_eq!(json(&checked)["feasible"], true);
}

#[test]
fn tampered_solutions_fail_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let net = write(dir.path(), "net.json", &tiny_blend(3, 4).to_canonical_json());
    let mut solution = json(&waternet(&["optimize", arg(&net)]));
    let flows = solution["flows"].as_object_mut().unwrap();
    let (edge, flow) = flows.iter().find(|(_, f)| f.as_f64().unwrap() > 1.0).map(|(e, f)| (e.clone(), f.as_f64().unwrap())).unwrap();
    flows.insert(edge, Value::from(flow * 0.5));
    let sol = write(dir.path(), "bad.sol.json", &solution.to_string());
    let checked = waternet(&["check", arg(&net), arg(&sol)]);
    assert_eq!(code(&checked), 1);
    assert_eq!(json(&checked)["feasible"], false);
}

#[test]
fn lp_export_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let net = write(dir.path(), "net.json", &stdout(&waternet(&["gen", "--shape", "refinery", "--seed", "3"])));
    let a = waternet(&["export-lp", arg(&net), "--K", "12"]);
    let b = waternet(&["export-lp", arg(&net), "--K", "12"]);
    assert_eq!(code(&a), 0);
    assert!(stdout(&a).contains("Subject To"), "{}", stdout(&a));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, waternet(&["export-lp", arg(&net), "--K", "13"]).stdout);
}

#[test]
fn trials_repeat_with_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let net = write(dir.path(), "net.json", &stdout(&waternet(&["gen", "--shape", "refinery", "--seed", "3"])));
    let mut config = json(&waternet(&["gen", "--shape", "refinery", "--trial-config"]));
    config["n_trials"] = Value::from(6);
    config["seed"] = Value::from(17);
    let config = write(dir.path(), "trials.json", &config.to_string());
    let a = waternet(&["trials", arg(&net), arg(&config), "--jobs", "1"]);
    let b = waternet(&["trials", arg(&net), arg(&config), "--jobs", "2"]);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["n_trials"], 6);
}

#[test]
fn compare_reports_both_networks() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.json", &tiny_blend(5, 4).to_canonical_json());
    let b = write(dir.path(), "b.json", &tiny_blend(6, 4).to_canonical_json());
    let config = write(dir.path(), "c.json", r#"{"n_trials": 4, "seed": 2}"#);
    let out = waternet(&["compare", arg(&a), arg(&b), arg(&config)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let comparison = json(&out);
    assert!(comparison["current"].is_object() && comparison["updated"].is_object());
    assert_eq!(comparison["per_trial"].as_array().unwrap().len(), 4);
}

#[test]
fn invalid_networks_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut net = tiny_blend(3, 4);
    net.edges.push(Edge::new("D", "NOWHERE"));
    let path = write(dir.path(), "net.json", &net.to_canonical_json());
    let out = waternet(&["validate", arg(&path)]);
    assert_eq!(code(&out), 1);
    assert!(!json(&out)["violations"].as_array().unwrap().is_empty());
    assert_eq!(code(&waternet(&["optimize", arg(&path)])), 1);
    let junk = write(dir.path(), "junk.json", "{ nope");
    assert_eq!(code(&waternet(&["validate", arg(&junk)])), 1);
}

#[test]
fn infeasible_networks_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut net: Network = tiny_blend(3, 4);
    net.components.get_mut("D").unwrap().attrs.quality_mut("P").upper = Some(0.0);
    let path = write(dir.path(), "net.json", &net.to_canonical_json());
    let out = waternet(&["optimize", arg(&path)]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["status"], "Infeasible");
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "net.json", &tiny_blend(3, 4).to_canonical_json());
    assert_eq!(code(&waternet(&[])), 2);
    assert_eq!(code(&waternet(&["optimize"])), 2);
    assert_eq!(code(&waternet(&["optimize", "/nonexistent/net.json"])), 2);
    assert_eq!(code(&waternet(&["optimize", arg(&path), "--K", "0"])), 2);
    assert_eq!(code(&waternet(&["optimize", arg(&path), "--backend", "magic"])), 2);
    assert_eq!(code(&waternet(&["gen", "--shape", "castle"])), 2);
}

#[test]
fn external_backend_uses_solver_cmd() {
    let dir = tempfile::tempdir().unwrap();
    let net = write(dir.path(), "net.json", &tiny_blend(4, 4).to_canonical_json());
    let exact = json(&waternet(&["optimize", arg(&net)]));
    let command = format!("'{}' {{model}} {{solution}} --gap {{gap}} --time {{time}}", env!("CARGO_BIN_EXE_waternet-lpsolve"));
    let out = Command::new(env!("CARGO_BIN_EXE_waternet")).args(["optimize", arg(&net), "--backend", "external"]).env("SOLVER_CMD", &command).output().unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let external = json(&out);
    let (a, b) = (exact["objective_value"].as_f64().unwrap(), external["objective_value"].as_f64().unwrap());
    assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{a} vs {b}");
    let sol = write(dir.path(), "ext.sol.json", &stdout(&out));
    assert_eq!(code(&waternet(&["check", arg(&net), arg(&sol)])), 0);

    // No solver configured is a backend failure.
    assert_eq!(code(&waternet(&["optimize", arg(&net), "--backend", "external"])), 3);
}

#[test]
fn network_objective_can_be_overridden_in_part() {
    let dir = tempfile::tempdir().unwrap();
    let net = write(dir.path(), "net.json", &tiny_blend(4, 4).to_canonical_json());
    let max = json(&waternet(&["optimize", arg(&net), "--sense", "max"]));
    let min = json(&waternet(&["optimize", arg(&net), "--sense", "min"]));
    assert!(max["objective_value"].as_f64().unwrap() >= min["objective_value"].as_f64().unwrap());
}

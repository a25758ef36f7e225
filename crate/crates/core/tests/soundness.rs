use std::time::Instant;

use waternet::engine::{check_options_for, optimize, OptimizeRequest};
use waternet::gen::random_network;
use waternet::milp::BuildOptions;
use waternet::oracle::check_feasibility;
use waternet::solution::SolveStatus;
use waternet::solver::{Backend, SolveLimits};

#[test]
fn random_solutions_pass_the_independent_checker() {
    let start = Instant::now();
    let (mut solved, mut infeasible) = (0, 0);
    for seed in 0..200u64 {
        let net = random_network(seed);
        let k = 2 + (seed % 19) as u32;
        let request = OptimizeRequest { build: BuildOptions::with_k(k), limits: SolveLimits::exact(), backend: Backend::Exact };
        let t = Instant::now();
        let solution = optimize(&net, &request).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        if t.elapsed().as_secs_f64() > 1.0 {
            eprintln!("seed {seed} K={k} took {:?}", t.elapsed());
        }
        match solution.status {
            SolveStatus::Infeasible => infeasible += 1,
            SolveStatus::Optimal => {
                solved += 1;
                let report = check_feasibility(&net, &solution.flows, net.objective.as_ref(), &check_options_for(&request.build)).unwrap();
                assert!(report.feasible, "seed {seed}: {:?}", report.violations);
                let claimed = solution.objective_value.unwrap();
                let recomputed = report.objective_value.unwrap();
                assert!((claimed - recomputed).abs() <= 1e-6 * (1.0 + claimed.abs()), "seed {seed}: {claimed} vs {recomputed}");
            }
            other => panic!("seed {seed}: unexpected status {other:?}"),
        }
    }
    eprintln!("solved {solved}, infeasible {infeasible}, {:?}", start.elapsed());
    assert!(solved >= 100, "only {solved} of 200 instances had a solution");
    assert!(start.elapsed().as_secs() < 120);
}

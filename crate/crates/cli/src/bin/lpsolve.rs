//! Solves an LP-format model file with the built-in branch and bound and
//! writes a solution file, so the external backend can be exercised
//! without a third-party solver:
//!
//! ```text
//! SOLVER_CMD="waternet-lpsolve {model} {solution} --gap {gap} --time {time}"
//! ```

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use waternet::milp::lp_format::parse_lp;
use waternet::solver::{solve_exact, write_solution_file, SolveLimits};

#[derive(Parser)]
#[command(name = "waternet-lpsolve", version, about = "Solve an LP-format MILP with the built-in solver")]
struct Cli {
    model: PathBuf,
    solution: PathBuf,
    #[arg(long, default_value_t = SolveLimits::default().max_gap)]
    gap: f64,
    #[arg(long, default_value_t = SolveLimits::default().max_time)]
    time: f64,
}

fn run(cli: &Cli) -> Result<(), (u8, String)> {
    let text = std::fs::read_to_string(&cli.model).map_err(|e| (2, format!("cannot read {}: {e}", cli.model.display())))?;
    let model = parse_lp(&text).map_err(|e| (1, e.to_string()))?;
    let solution = solve_exact(&model, &SolveLimits { max_gap: cli.gap, max_time: cli.time }).map_err(|e| (3, e.to_string()))?;
    std::fs::write(&cli.solution, write_solution_file(&solution, &model)).map_err(|e| (3, format!("cannot write {}: {e}", cli.solution.display())))
}

fn main() -> ExitCode {
    match run(&Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

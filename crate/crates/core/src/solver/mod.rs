//! MILP backends: the bundled exact search over blend assignments and
//! activity patterns, and an external solver driven through LP files.

mod exact;
mod external;
pub mod simplex;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::milp::MilpModel;
use crate::solution::SolveStatus;

pub use exact::{solve_exact, solve_exact_with, ExactOptions};
pub use external::{parse_solution_file, solve_external, write_solution_file, SOLVER_CMD_ENV};
pub use simplex::{simplex_lp, LpOutcome, LpProblem, LpRow};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("no external solver configured (set {})", external::SOLVER_CMD_ENV)]
    MissingSolver,
    #[error("external solver failed:\n{log}")]
    SolverCrash { log: String },
    #[error("cannot parse solver output at line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("simplex pivot fell below 1e-12")]
    NumericalBreakdown,
    #[error("simplex iteration limit reached")]
    IterationLimit,
    #[error("search budget exhausted with {remaining} open node(s) and no feasible assignment")]
    BudgetExceeded { remaining: usize },
    #[error("i/o error: {0}")]
    Io(String),
}

/// Stopping rules: relative gap and wall-clock seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveLimits {
    pub max_gap: f64,
    pub max_time: f64,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits { max_gap: 0.01, max_time: 90.0 }
    }
}

impl SolveLimits {
    /// Proven optimality within floating-point tolerance.
    pub fn exact() -> Self {
        SolveLimits { max_gap: 0.0, ..SolveLimits::default() }
    }

    pub fn is_valid(&self) -> bool {
        self.max_gap >= 0.0 && self.max_time > 0.0 && self.max_time.is_finite()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Exact,
    /// Command taken from the `SOLVER_CMD` environment variable.
    External,
}

/// Raw result over model variables.
#[derive(Clone, Debug, PartialEq)]
pub struct MilpSolution {
    pub status: SolveStatus,
    /// One value per model variable; empty when no assignment is known.
    pub values: Vec<f64>,
    pub objective: Option<f64>,
    pub gap: Option<f64>,
    /// Search nodes processed (exact backend only).
    pub nodes: usize,
    pub solve_time: Duration,
}

impl MilpSolution {
    pub fn without_values(status: SolveStatus) -> Self {
        MilpSolution { status, values: Vec::new(), objective: None, gap: None, nodes: 0, solve_time: Duration::ZERO }
    }
}

/// Dispatches to the chosen backend.
pub fn solve(model: &MilpModel, limits: &SolveLimits, backend: Backend) -> Result<MilpSolution, SolveError> {
    match backend {
        Backend::Exact => solve_exact(model, limits),
        Backend::External => {
            let command = std::env::var(SOLVER_CMD_ENV).map_err(|_| SolveError::MissingSolver)?;
            solve_external(model, limits, &command)
        }
    }
}

use thiserror::Error;

use crate::validate::ValidationReport;

/// Errors raised while preparing, building or solving a model.
#[derive(Debug, Error)]
pub enum Error {
    #[error("network is invalid ({} violation(s))", .0.violations.len())]
    Invalid(ValidationReport),

    #[error("network contains a cycle through `{0}`")]
    Cyclic(String),

    #[error("component `{component}` has no given quality for pollutant `{pollutant}`")]
    MissingQuality { component: String, pollutant: String },

    #[error("flow through `{0}` is unbounded; add a capacity, a fixed supply or an explicit flow bound")]
    UnboundedBigM(String),

    #[error("objective has no non-zero coefficient over its scope")]
    EmptyObjective,

    #[error("invalid objective: {0}")]
    InvalidObjective(String),

    #[error("edge `{edge}` belongs to more than one option of conflict set `{set}`")]
    OverlappingOptions { set: String, edge: String },

    #[error("option `{0}` does not match any edge")]
    UnknownOption(String),

    #[error("solve limits need max_gap >= 0 and a positive, finite max_time")]
    InvalidLimits,

    #[error("discretization number must be at least 1")]
    InvalidDiscretization,

    #[error("solution references `{0}`, which does not map to the network")]
    Corrupt(String),

    #[error(transparent)]
    Solve(#[from] crate::solver::SolveError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

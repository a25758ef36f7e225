pub mod engine;
pub mod error;
pub mod gen;
pub mod milp;
pub mod network;
pub mod oracle;
pub mod preprocess;
pub mod scenario;
pub mod solution;
pub mod solver;
pub mod topology;
pub mod validate;

pub use engine::{optimize, OptimizeRequest};
pub use error::{Error, Result};

//! `waternet` command line. Results go to stdout as JSON (LP text for
//! `export-lp`); diagnostics go to stderr.
//!
//! Exit codes: 0 success, 1 infeasible or invalid input, 2 usage,
//! 3 solver or backend failure.

use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use waternet::engine::{check, check_options_for, prepare};
use waternet::gen::{generate, implement, shape_config, Shape, Variant};
use waternet::milp::lp_format::write_lp;
use waternet::network::{Network, Objective, ObjectiveKind, Sense};
use waternet::scenario::{compare_networks, run_trials, ScenarioError, TrialConfig};
use waternet::solution::{Solution, SolveStatus};
use waternet::solver::Backend;
use waternet::validate::validate;
use waternet::{Error, OptimizeRequest};
use waternet_service::ServiceConfig;

#[derive(Parser)]
#[command(name = "waternet", version, about = "Water-flow and quality optimization for process networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a network for structural and data errors.
    Validate { network: PathBuf },
    /// Optimize a network and print the solution.
    Optimize {
        network: PathBuf,
        #[command(flatten)]
        options: SolveArgs,
    },
    /// Verify a solution against the nonlinear network equations.
    Check {
        network: PathBuf,
        solution: PathBuf,
        /// Optimize request the solution was produced with (for mu and quality rules).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run design trials over sampled parameters.
    Trials {
        network: PathBuf,
        config: PathBuf,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
    },
    /// Compare KPIs of two networks on the same sampled parameters.
    Compare {
        current: PathBuf,
        updated: PathBuf,
        config: PathBuf,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
    },
    /// Print the model in LP format.
    ExportLp {
        network: PathBuf,
        #[command(flatten)]
        options: SolveArgs,
    },
    /// Generate a sample network.
    Gen {
        #[arg(long)]
        shape: Shape,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "updated")]
        variant: Variant,
        /// Keep only these options (comma separated) and drop the other candidates.
        #[arg(long, value_delimiter = ',')]
        implement: Vec<String>,
        /// Print the shape's trial configuration instead of the network.
        #[arg(long)]
        trial_config: bool,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "waternet-store")]
        store: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        /// Concurrent runs (default: CPU count).
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, default_value_t = waternet_service::DEFAULT_QUEUE_LIMIT)]
        queue_limit: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    TotalFlow,
    Cost,
    Energy,
}

#[derive(Clone, Copy, ValueEnum)]
enum SenseArg {
    #[value(alias = "min")]
    Minimize,
    #[value(alias = "max")]
    Maximize,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Exact,
    External,
}

#[derive(Args)]
struct SolveArgs {
    /// Optimize request JSON; the flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    objective: Option<KindArg>,
    #[arg(long)]
    sense: Option<SenseArg>,
    /// Components whose flows enter the objective (comma separated).
    #[arg(long, value_delimiter = ',')]
    scope: Option<Vec<String>>,
    /// Discretization number.
    #[arg(long = "K", alias = "k")]
    k: Option<u32>,
    /// Relative optimality gap.
    #[arg(long)]
    gap: Option<f64>,
    /// Time limit in seconds.
    #[arg(long)]
    time: Option<f64>,
    #[arg(long)]
    backend: Option<BackendArg>,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure { code: 1, message: message.into() }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Solve(_) => 3,
            Error::InvalidLimits | Error::InvalidDiscretization => 2,
            _ => 1,
        };
        let message = match &e {
            Error::Invalid(report) => format!("{e}\n{}", serde_json::to_string_pretty(report).unwrap_or_default()),
            _ => e.to_string(),
        };
        Failure { code, message }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Model(e) => e.into(),
            ScenarioError::Pool(_) => Failure { code: 3, message: e.to_string() },
            e => invalid(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, Failure> {
    serde_json::from_str(&read(path)?).map_err(|e| invalid(format!("{} is not a valid {what}: {e}", path.display())))
}

fn read_network(path: &Path) -> Result<Network, Failure> {
    read_json(path, "network")
}

impl SolveArgs {
    fn request(&self, net: &Network) -> Result<OptimizeRequest, Failure> {
        let mut request: OptimizeRequest = match &self.config {
            Some(path) => read_json(path, "optimize request")?,
            None => OptimizeRequest::default(),
        };
        if self.objective.is_some() || self.sense.is_some() || self.scope.is_some() {
            let base = request.build.objective.clone().or_else(|| net.objective.clone());
            let kind = self.objective.map(|k| match k {
                KindArg::TotalFlow => ObjectiveKind::TotalFlow,
                KindArg::Cost => ObjectiveKind::Cost,
                KindArg::Energy => ObjectiveKind::Energy,
            });
            let sense = self.sense.map(|s| match s {
                SenseArg::Minimize => Sense::Minimize,
                SenseArg::Maximize => Sense::Maximize,
            });
            let kind = kind.or(base.as_ref().map(|o| o.kind)).ok_or_else(|| usage("--objective is required when the network has no objective"))?;
            let sense = sense.or(base.as_ref().map(|o| o.sense)).ok_or_else(|| usage("--sense is required when the network has no objective"))?;
            let scope = self.scope.clone().or(base.map(|o| o.scope)).ok_or_else(|| usage("--scope is required when the network has no objective"))?;
            request.build.objective = Some(Objective { kind, sense, scope });
        }
        if let Some(k) = self.k {
            request.build.discretization = k;
        }
        if let Some(gap) = self.gap {
            request.limits.max_gap = gap;
        }
        if let Some(time) = self.time {
            request.limits.max_time = time;
        }
        if let Some(backend) = self.backend {
            request.backend = match backend {
                BackendArg::Exact => Backend::Exact,
                BackendArg::External => Backend::External,
            };
        }
        Ok(request)
    }
}

/// Writes to stdout; a reader that went away early is not an error.
fn emit(text: &str) -> Result<(), Failure> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure { code: 3, message: format!("cannot write output: {e}") }),
        _ => Ok(()),
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Failure> {
    emit(&format!("{}\n", serde_json::to_string_pretty(value).expect("serialization is infallible")))
}

fn solution_exit(solution: &Solution) -> Result<(), Failure> {
    match solution.status {
        SolveStatus::Optimal | SolveStatus::FeasibleWithinGap => Ok(()),
        SolveStatus::TimedOut if solution.has_flows() => {
            eprintln!("time limit reached; the solution is the best found (gap {:?})", solution.gap);
            Ok(())
        }
        SolveStatus::TimedOut => Err(Failure { code: 3, message: "time limit reached without a feasible solution".into() }),
        status => Err(invalid(format!("no solution: {status:?}"))),
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Validate { network } => {
            let report = validate(&read_network(&network)?);
            print_json(&report)?;
            for warning in &report.warnings {
                eprintln!("warning: {warning}");
            }
            if !report.is_valid() {
                return Err(invalid(format!("{} violation(s)", report.violations.len())));
            }
        }
        Command::Optimize { network, options } => {
            let net = read_network(&network)?;
            let request = options.request(&net)?;
            let solution = waternet::optimize(&net, &request)?;
            emit(&solution.to_json())?;
            eprintln!("{:?} in {:.3} s", solution.status, solution.solve_time.as_secs_f64());
            solution_exit(&solution)?;
        }
        Command::Check { network, solution, config } => {
            let net = read_network(&network)?;
            let solution = Solution::from_json(&read(&solution)?).map_err(|e| invalid(format!("not a valid solution: {e}")))?;
            let request: OptimizeRequest = match &config {
                Some(path) => read_json(path, "optimize request")?,
                None => OptimizeRequest::default(),
            };
            let report = check(&net, &solution, &check_options_for(&request.build))?;
            print_json(&report)?;
            if !report.feasible {
                return Err(invalid(format!("{} violation(s)", report.violations.len())));
            }
        }
        Command::Trials { network, config, jobs } => {
            let net = read_network(&network)?;
            let config: TrialConfig = read_json(&config, "trial configuration")?;
            let result = run_trials(&config, &net, jobs.max(1))?;
            emit(&result.to_json())?;
            eprintln!(
                "{} trials, {} infeasible, {} errored, {:.1} s",
                result.n_trials,
                result.infeasible,
                result.errored,
                result.runtime.total.as_secs_f64()
            );
        }
        Command::Compare { current, updated, config, jobs } => {
            let (a, b) = (read_network(&current)?, read_network(&updated)?);
            let config: TrialConfig = read_json(&config, "trial configuration")?;
            let comparison = compare_networks(&a, &b, &config, jobs.max(1))?;
            emit(&comparison.to_json())?;
        }
        Command::ExportLp { network, options } => {
            let net = read_network(&network)?;
            let request = options.request(&net)?;
            let (_, model) = prepare(&net, &request.build)?;
            emit(&write_lp(&model))?;
        }
        Command::Gen { shape, seed, variant, implement: chosen, trial_config } => {
            if trial_config {
                emit(&shape_config(shape).to_json())?;
                return Ok(());
            }
            let mut net = generate(shape, variant, seed)?;
            if !chosen.is_empty() {
                let chosen: Vec<&str> = chosen.iter().map(String::as_str).collect();
                net = implement(&net, &chosen);
            }
            emit(&net.to_canonical_json())?;
        }
        Command::Serve { store, bind, workers, queue_limit } => {
            let mut config = ServiceConfig::new(store);
            if let Some(workers) = workers {
                config.workers = workers.max(1);
            }
            config.queue_limit = queue_limit;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure { code: 3, message: e.to_string() })?;
            runtime.block_on(waternet_service::serve(&config, bind)).map_err(|e| Failure { code: 3, message: e.to_string() })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

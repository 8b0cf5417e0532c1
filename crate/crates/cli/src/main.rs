use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sds_core::closedform::{self, Optimum};
use sds_core::engine::trial_instance;
use sds_core::solver::{self, GridSpacing};
use sds_core::validation::run_checks;
use sds_core::{
    ArrivalModel, EvalConfig, Execution, ModelConfig, Policy, PoissonArrivals, Population, SolverConfig, WaitingModel,
};

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (", env!("SDS_BUILD_INFO"), ")");

/// Secretary selection with stochastic departures.
#[derive(Debug, Parser)]
#[command(name = "sds", version = VERSION, about, propagate_version = true)]
struct Cli {
    /// Seed for every stochastic command.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo success rate of a policy.
    Simulate(SimulateArgs),
    /// Solve for a bivariate (time, count) policy.
    Solve(SolveArgs),
    /// Find the single time threshold where the barrier curve meets the arrival CDF.
    Threshold(ThresholdArgs),
    /// Closed-form success probability for exponential waits.
    ClosedForm(ClosedFormArgs),
    /// Optimal threshold for exponential waits.
    Optimize(OptimizeArgs),
    /// Optimal thresholds for the reference rates as CSV.
    Table1(Table1Args),
    /// Optimal threshold and success probability over a range of rates.
    Sweep(SweepArgs),
    /// Run the statistical self-checks; exits nonzero on failure.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Model file with `arrival`, `waiting` and optional `arrivals` entries.
    #[arg(long)]
    model: Option<PathBuf>,

    /// Arrival law: uniform, burst:EPS or piecewise:LO,HI,MASS;...
    #[arg(long)]
    arrival: Option<String>,

    /// Waiting law: exp:RATE or point:VALUE.
    #[arg(long)]
    waiting: Option<String>,
}

impl ModelArgs {
    fn load(&self) -> Result<ModelConfig> {
        let mut model = match &self.model {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                ModelConfig::from_json(&text)?
            }
            None => ModelConfig::default(),
        };
        if let Some(a) = &self.arrival {
            model.arrival = a.parse::<ArrivalModel>()?;
        }
        if let Some(w) = &self.waiting {
            model.waiting = w.parse::<WaitingModel>()?;
        }
        Ok(model)
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Number of candidates.
    #[arg(long, required_unless_present = "poisson", conflicts_with = "poisson")]
    n: Option<usize>,

    /// Poisson intensity for the number of candidates.
    #[arg(long)]
    poisson: Option<f64>,

    #[command(flatten)]
    model: ModelArgs,

    /// never, threshold:X, rankcutoff:M or grid:PATH.
    #[arg(long)]
    policy: String,

    #[arg(long, default_value_t = 100_000)]
    trials: u64,

    /// Report path (JSON); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Write simulated instances as JSON lines.
    #[arg(long)]
    dump_trajectories: Option<PathBuf>,

    /// Maximum number of instances to dump.
    #[arg(long, default_value_t = 1000)]
    dump_limit: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Spacing {
    Quantile,
    Time,
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[arg(long)]
    n: usize,

    #[command(flatten)]
    model: ModelArgs,

    /// Number of time cells.
    #[arg(long, default_value_t = solver::DEFAULT_CELLS)]
    grid: usize,

    /// Rollout budget per estimate.
    #[arg(long, default_value_t = solver::DEFAULT_ROLLOUTS)]
    rollouts: u64,

    #[arg(long, value_enum, default_value_t = Spacing::Quantile)]
    spacing: Spacing,

    /// Keep raw cutoffs even for uniform arrivals.
    #[arg(long)]
    no_project: bool,

    /// Evaluate every count instead of binary search.
    #[arg(long)]
    linear_scan: bool,
}

impl SolverArgs {
    fn config(&self, seed: u64) -> SolverConfig {
        SolverConfig {
            cells: self.grid,
            rollouts: self.rollouts,
            project: !self.no_project,
            linear_scan: self.linear_scan,
            spacing: match self.spacing {
                Spacing::Quantile => GridSpacing::Quantile,
                Spacing::Time => GridSpacing::Time,
            },
            ..SolverConfig::new(self.n, seed)
        }
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    solver: SolverArgs,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ThresholdArgs {
    #[command(flatten)]
    solver: SolverArgs,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ClosedFormArgs {
    #[arg(long)]
    lambda: f64,

    #[arg(long)]
    theta: f64,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[arg(long)]
    lambda: f64,
}

#[derive(Debug, Args)]
struct Table1Args {
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 0.1)]
    lambda_min: f64,

    #[arg(long, default_value_t = 10.0)]
    lambda_max: f64,

    #[arg(long, default_value_t = 0.1)]
    step: f64,

    /// CSV of (lambda, theta_star).
    #[arg(long)]
    out_thresholds: PathBuf,

    /// CSV of (lambda, p_star).
    #[arg(long)]
    out_probs: PathBuf,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// Smaller sample sizes.
    #[arg(long)]
    quick: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let exec = configure_threads(cli.threads)?;
    let seed = cli.seed;
    match cli.command {
        Command::Simulate(args) => simulate(args, seed, exec)?,
        Command::Solve(args) => {
            let model = args.solver.model.load()?;
            let cfg = SolverConfig {
                execution: exec,
                ..args.solver.config(seed)
            };
            let solved = solver::solve_bivariate(&model.arrival, &model.waiting, &cfg)?;
            write_json(args.out.as_deref(), &Policy::BivariateGrid(solved.policy))?;
        }
        Command::Threshold(args) => {
            let model = args.solver.model.load()?;
            let cfg = SolverConfig {
                execution: exec,
                ..args.solver.config(seed)
            };
            let found = solver::find_threshold(&model.arrival, &model.waiting, &cfg)?;
            write_json(args.out.as_deref(), &found.result)?;
        }
        Command::ClosedForm(args) => {
            #[derive(Serialize)]
            struct Out {
                lambda: f64,
                theta: f64,
                success_probability: f64,
            }
            let p = closedform::success_probability(args.lambda, args.theta)?;
            write_json(
                None,
                &Out {
                    lambda: args.lambda,
                    theta: args.theta,
                    success_probability: p,
                },
            )?;
        }
        Command::Optimize(args) => write_json(None, &closedform::optimize_threshold(args.lambda)?)?,
        Command::Table1(args) => {
            let rows = closedform::table1(exec)?;
            write_table(args.out.as_deref(), &rows)?;
        }
        Command::Sweep(args) => {
            let rows = closedform::sweep(args.lambda_min, args.lambda_max, args.step, exec)?;
            write_pairs(&args.out_thresholds, "theta_star", rows.iter().map(|r| (r.lambda, r.theta_star)))?;
            write_pairs(&args.out_probs, "p_star", rows.iter().map(|r| (r.lambda, r.p_star)))?;
        }
        Command::Check(args) => {
            let report = run_checks(seed, args.quick, exec)?;
            for item in &report.items {
                println!("{} {}: {}", if item.passed { "PASS" } else { "FAIL" }, item.name, item.detail);
            }
            if !report.passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: Option<usize>) -> Result<Execution> {
    if let Some(n) = threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
        if n == 1 {
            return Ok(Execution::Sequential);
        }
    }
    Ok(Execution::Parallel)
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(threads: Option<usize>) -> Result<Execution> {
    if threads == Some(0) {
        bail!("--threads must be at least 1");
    }
    Ok(Execution::Sequential)
}

fn parse_policy(text: &str) -> Result<Policy> {
    if let Some(path) = text.strip_prefix("grid:") {
        let json = fs::read_to_string(path).with_context(|| format!("reading policy file {path}"))?;
        return Ok(Policy::from_json(&json)?);
    }
    Ok(text.parse()?)
}

fn simulate(args: SimulateArgs, seed: u64, exec: Execution) -> Result<()> {
    let model = args.model.load()?;
    let policy = parse_policy(&args.policy)?;
    let population = match (args.n, args.poisson, model.arrivals) {
        (Some(n), _, _) => Population::Fixed(n),
        (None, Some(rate), _) => Population::Poisson(PoissonArrivals::new(rate)?),
        (None, None, Some(p)) => Population::Poisson(p),
        (None, None, None) => bail!("give --n or --poisson"),
    };
    let cfg = EvalConfig {
        trials: args.trials,
        seed,
        population,
        execution: exec,
    };
    let report = sds_core::evaluate(&policy, &model.arrival, &model.waiting, &cfg)?;
    if let Some(path) = &args.dump_trajectories {
        let mut out = BufWriter::new(fs::File::create(path).with_context(|| format!("creating {}", path.display()))?);
        for i in 0..args.dump_limit.min(cfg.trials) {
            if let Some(t) = trial_instance(&model.arrival, &model.waiting, &cfg, i) {
                serde_json::to_writer(&mut out, &t)?;
                out.write_all(b"\n")?;
            }
        }
        out.flush()?;
    }
    write_json(args.out.as_deref(), &report)
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => Ok(io::stdout().write_all(text.as_bytes())?),
    }
}

fn write_table(path: Option<&Path>, rows: &[Optimum]) -> Result<()> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_pairs(path: &Path, column: &str, rows: impl Iterator<Item = (f64, f64)>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["lambda", column])?;
    for (lambda, value) in rows {
        w.write_record([lambda.to_string(), value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

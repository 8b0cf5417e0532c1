//! Secretary selection with stochastic departures: arrival and waiting laws,
//! instance simulation, bivariate stopping policies, a backward-induction
//! solver and the closed-form exponential-wait analysis.

pub mod closedform;
pub mod distributions;
pub mod engine;
pub mod error;
pub mod exec;
pub mod policies;
pub mod process;
pub mod rng;
pub mod solver;
pub mod validation;

pub use distributions::{ArrivalModel, ModelConfig, PoissonArrivals, WaitingModel};
pub use engine::{evaluate, evaluate_conditional, EvalConfig, EvalReport, Population};
pub use error::{Result, SdsError};
pub use exec::Execution;
pub use policies::{Decision, DecisionRule, GridPolicy, Policy, RunOutcome};
pub use process::{ConditionalFutureSpec, SamplerMode, Trajectory};
pub use solver::{find_threshold, solve_bivariate, SolverConfig, ThresholdResult};

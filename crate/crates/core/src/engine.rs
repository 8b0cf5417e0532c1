//! Monte Carlo evaluation of stopping rules.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{ArrivalModel, PoissonArrivals, WaitingModel};
use crate::error::{Result, SdsError};
use crate::exec::{count_successes, Execution};
use crate::policies::{run_policy, DecisionRule};
use crate::process::{sample_conditional_future, sample_instance, ConditionalFutureSpec, RecordChain, SamplerMode, Trajectory};
use crate::rng::{trial_rng, TrialRng};

/// z-value of a two-sided 99% normal interval.
pub const Z99: f64 = 2.576;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Population {
    Fixed(usize),
    Poisson(PoissonArrivals),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub trials: u64,
    pub seed: u64,
    pub population: Population,
    pub execution: Execution,
}

impl EvalConfig {
    pub fn fixed(n: usize, trials: u64, seed: u64) -> Self {
        EvalConfig {
            trials,
            seed,
            population: Population::Fixed(n),
            execution: Execution::default(),
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(SdsError::field("trials", "need at least one trial"));
        }
        if self.population == Population::Fixed(0) {
            return Err(SdsError::field("n", "need at least one candidate"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub success_rate: f64,
    pub half_width: f64,
    pub trials: u64,
    pub seed: u64,
}

impl EvalReport {
    pub fn from_counts(successes: u64, trials: u64, seed: u64) -> Self {
        let p = successes as f64 / trials as f64;
        EvalReport {
            success_rate: p,
            half_width: Z99 * (p * (1.0 - p) / trials as f64).sqrt(),
            trials,
            seed,
        }
    }

    /// One binomial standard error.
    pub fn std_error(&self) -> f64 {
        self.half_width / Z99
    }
}

/// How conditional futures are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConditionalSampler {
    Full(SamplerMode),
    /// Only best-so-far arrivals are drawn; same law, cost grows with log(n / k).
    #[default]
    Records,
}

fn draw_instance(
    arrival: &ArrivalModel,
    waiting: &WaitingModel,
    population: Population,
    rng: &mut TrialRng,
) -> Option<Trajectory> {
    let n = match population {
        Population::Fixed(n) => n,
        Population::Poisson(p) => p.sample_count(rng),
    };
    (n > 0).then(|| sample_instance(n, arrival, waiting, rng))
}

/// The instance trial `index` of [`evaluate`] runs on; `None` for an empty Poisson draw.
pub fn trial_instance(arrival: &ArrivalModel, waiting: &WaitingModel, cfg: &EvalConfig, index: u64) -> Option<Trajectory> {
    let mut rng = trial_rng(cfg.seed, index);
    draw_instance(arrival, waiting, cfg.population, &mut rng)
}

pub fn evaluate<D: DecisionRule + Sync + ?Sized>(
    policy: &D,
    arrival: &ArrivalModel,
    waiting: &WaitingModel,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    cfg.validate()?;
    if matches!(cfg.population, Population::Poisson(_)) && !arrival.is_uniform01() {
        return Err(SdsError::Config(
            "Poisson arrivals require the uniform arrival model".into(),
        ));
    }
    let wins = count_successes(cfg.execution, cfg.seed, 0, cfg.trials, |rng, _| {
        draw_instance(arrival, waiting, cfg.population, rng).is_some_and(|t| run_policy(policy, &t).success)
    });
    Ok(EvalReport::from_counts(wins, cfg.trials, cfg.seed))
}

/// One conditional rollout: does `rule`, applied to events after the cut,
/// accept the overall best?
pub fn conditional_trial<D: DecisionRule + ?Sized, R: Rng + ?Sized>(
    rule: &D,
    spec: &ConditionalFutureSpec,
    cdf_at_t: f64,
    sampler: ConditionalSampler,
    rng: &mut R,
) -> bool {
    match sampler {
        ConditionalSampler::Records => {
            let mut chain = RecordChain::new(&spec.arrival, &spec.waiting, cdf_at_t, spec.k, spec.n, rng);
            chain
                .find(|e| rule.accepts(e.time, e.k_at_t))
                .is_some_and(|e| e.is_overall_best)
        }
        ConditionalSampler::Full(mode) => {
            let future = sample_conditional_future(spec, rng, mode).expect("spec validated by caller");
            let best = future.global_best();
            future
                .decision_events()
                .into_iter()
                .find(|e| rule.accepts(e.time, e.k_at_t))
                .is_some_and(|e| Some(e.index) == best)
        }
    }
}

/// Estimates the success probability of rejecting a best-so-far departure at
/// `spec.t` with `K_t = spec.k` and continuing with `rule`.
///
/// Success means the future candidate accepted is the overall best; when no
/// future candidate beats the earlier ones the departed candidate was the best
/// and the trial fails. `cfg.population` must be `Fixed(spec.n)`.
pub fn evaluate_conditional<D: DecisionRule + Sync + ?Sized>(
    rule: &D,
    spec: &ConditionalFutureSpec,
    cfg: &EvalConfig,
    sampler: ConditionalSampler,
) -> Result<EvalReport> {
    cfg.validate()?;
    spec.validate()?;
    if cfg.population != Population::Fixed(spec.n) {
        return Err(SdsError::Config(format!(
            "conditional evaluation needs a fixed population of n = {}",
            spec.n
        )));
    }
    if spec.k == spec.n {
        return Ok(EvalReport::from_counts(0, cfg.trials, cfg.seed));
    }
    let at = spec.arrival.cdf(spec.t);
    let wins = count_successes(cfg.execution, cfg.seed, 0, cfg.trials, |rng, _| {
        conditional_trial(rule, spec, at, sampler, rng)
    });
    Ok(EvalReport::from_counts(wins, cfg.trials, cfg.seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub violation_fraction: f64,
    pub violations: u64,
    pub trials: u64,
    pub gamma: f64,
}

/// Band half-width `2 sqrt(n ln 2n)` around `n A(t)`.
pub fn concentration_gamma(n: usize) -> f64 {
    let n = n as f64;
    2.0 * (n * (2.0 * n).ln()).sqrt()
}

/// Fraction of trials in which `K_t` leaves the band around `n A(t)` at some time.
///
/// `K_t` is a step function, so checking the value and the left limit at each
/// arrival covers every `t`.
pub fn concentration_check(n: usize, arrival: &ArrivalModel, cfg: &EvalConfig) -> Result<ConcentrationReport> {
    if n < 2 {
        return Err(SdsError::field("n", "concentration check needs n >= 2"));
    }
    if cfg.trials == 0 {
        return Err(SdsError::field("trials", "need at least one trial"));
    }
    let gamma = concentration_gamma(n);
    let nf = n as f64;
    let violations = count_successes(cfg.execution, cfg.seed, 0, cfg.trials, |rng, _| {
        let mut a: Vec<f64> = (0..n).map(|_| arrival.sample(rng)).collect();
        a.sort_unstable_by(f64::total_cmp);
        a.iter().enumerate().any(|(i, &t)| {
            let centre = nf * arrival.cdf(t);
            (i as f64 + 1.0 - centre).abs() > gamma || (i as f64 - centre).abs() > gamma
        })
    });
    Ok(ConcentrationReport {
        violation_fraction: violations as f64 / cfg.trials as f64,
        violations,
        trials: cfg.trials,
        gamma,
    })
}

//! Statistical self-checks run by `sds check`.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::distributions::{ArrivalModel, WaitingModel};
use crate::engine::{concentration_check, evaluate_conditional, ConditionalSampler, EvalConfig};
use crate::error::Result;
use crate::exec::Execution;
use crate::process::{sample_conditional_future, ConditionalFutureSpec, SamplerMode};
use crate::rng::{derive_seed, trial_rng};
use crate::solver::{monotonicity_report, solve_bivariate, SolverConfig};

pub const CHI_SQUARE_LEVEL: f64 = 0.001;

/// Pearson statistic and upper-tail p-value of `observed` against `expected` counts.
pub fn chi_square(observed: &[u64], expected: &[f64]) -> (f64, f64) {
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .filter(|(_, &e)| e > 0.0)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let dof = expected.iter().filter(|&&e| e > 0.0).count().saturating_sub(1).max(1);
    let p = ChiSquared::new(dof as f64).expect("positive degrees of freedom").sf(stat);
    (stat, p)
}

/// Probability of each best-so-far pattern of candidates `k+1..=n`; bit `i`
/// of the pattern index is candidate `k + 1 + i`.
pub fn exact_pattern_probabilities(k: usize, n: usize) -> Vec<f64> {
    let m = n - k;
    (0..1usize << m)
        .map(|pattern| {
            (0..m)
                .map(|i| {
                    let p = 1.0 / (k + 1 + i) as f64;
                    if pattern >> i & 1 == 1 {
                        p
                    } else {
                        1.0 - p
                    }
                })
                .product()
        })
        .collect()
}

/// Chi-square p-value of the pattern counts drawn by `mode` for `(k, n)`.
pub fn pattern_goodness_of_fit(k: usize, n: usize, mode: SamplerMode, samples: u64, seed: u64) -> Result<f64> {
    let spec = ConditionalFutureSpec::new(0.5, k, n, ArrivalModel::Uniform01, WaitingModel::PointMass(0.0))?;
    let probs = exact_pattern_probabilities(k, n);
    let mut counts = vec![0u64; probs.len()];
    for i in 0..samples {
        let future = sample_conditional_future(&spec, &mut trial_rng(seed, i), mode)?;
        let pattern = future
            .flags
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, &b)| acc | (b as usize) << i);
        counts[pattern] += 1;
    }
    let expected: Vec<f64> = probs.iter().map(|p| p * samples as f64).collect();
    Ok(chi_square(&counts, &expected).1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub items: Vec<CheckItem>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }
}

/// `(k, n)` pairs for the sampler comparison; all have `n - k <= 4`.
pub const PATTERN_CASES: [(usize, usize); 6] = [(1, 2), (1, 3), (1, 5), (2, 6), (6, 10), (16, 20)];

/// Invariant suite: sampler equivalence, concentration, monotonicity of
/// solved grids and agreement of the two conditional samplers.
pub fn run_checks(seed: u64, quick: bool, exec: Execution) -> Result<CheckReport> {
    let mut items = Vec::new();
    let samples = if quick { 20_000 } else { 100_000 };

    for (k, n) in PATTERN_CASES {
        for mode in [SamplerMode::Sequential, SamplerMode::Triples] {
            let p = pattern_goodness_of_fit(k, n, mode, samples, derive_seed(seed, &[1, k as u64, n as u64]))?;
            items.push(CheckItem {
                name: format!("sampler patterns {mode:?} k={k} n={n}"),
                passed: p > CHI_SQUARE_LEVEL,
                detail: format!("chi-square p = {p:.4}"),
            });
        }
    }

    let trials = if quick { 2_000 } else { 10_000 };
    for n in [100usize, 1000] {
        let cfg = EvalConfig::fixed(n, trials, derive_seed(seed, &[2, n as u64])).with_execution(exec);
        let r = concentration_check(n, &ArrivalModel::Uniform01, &cfg)?;
        let bound = 1.0 / n as f64;
        let limit = bound + 3.0 * (bound * (1.0 - bound) / trials as f64).sqrt();
        items.push(CheckItem {
            name: format!("concentration n={n}"),
            passed: r.violation_fraction <= limit,
            detail: format!("violations {} / {} (limit {:.4})", r.violations, trials, limit),
        });
    }

    let rollouts = if quick { 1000 } else { 5000 };
    let uniform_cfg = SolverConfig {
        cells: if quick { 16 } else { 64 },
        rollouts,
        execution: exec,
        ..SolverConfig::new(20, derive_seed(seed, &[3]))
    };
    let solved = solve_bivariate(&ArrivalModel::Uniform01, &WaitingModel::Exponential(1.0), &uniform_cfg)?;
    let report = monotonicity_report(&solved.raw_cutoffs, &ArrivalModel::Uniform01);
    items.push(CheckItem {
        name: "monotonicity uniform".into(),
        passed: report.k_violations == 0 && report.t_violations_projected == Some(0),
        detail: format!(
            "k violations {}, raw t violations {}, projected {:?}",
            report.k_violations, report.t_violations, report.t_violations_projected
        ),
    });

    let burst = ArrivalModel::burst(0.01)?;
    let burst_cfg = SolverConfig {
        rollouts,
        execution: exec,
        ..SolverConfig::new(50, derive_seed(seed, &[4]))
    };
    let solved = solve_bivariate(&burst, &WaitingModel::PointMass(0.03), &burst_cfg)?;
    let report = monotonicity_report(&solved.raw_cutoffs, &burst);
    items.push(CheckItem {
        name: "monotonicity burst".into(),
        passed: report.k_violations == 0 && report.t_violations >= 1,
        detail: format!("raw t violations {}", report.t_violations),
    });

    let conditional_trials = if quick { 20_000 } else { 100_000 };
    let rule = |t: f64, k: usize| t > 0.6 && k > 5;
    let spec = ConditionalFutureSpec::new(0.3, 3, 15, ArrivalModel::Uniform01, WaitingModel::Exponential(2.0))?;
    let cfg = EvalConfig::fixed(15, conditional_trials, derive_seed(seed, &[5])).with_execution(exec);
    let fast = evaluate_conditional(&rule, &spec, &cfg, ConditionalSampler::Records)?;
    let full = evaluate_conditional(&rule, &spec, &cfg, ConditionalSampler::Full(SamplerMode::Triples))?;
    let se = (fast.std_error().powi(2) + full.std_error().powi(2)).sqrt();
    let z = (fast.success_rate - full.success_rate).abs() / se.max(f64::MIN_POSITIVE);
    items.push(CheckItem {
        name: "record sampler vs full futures".into(),
        passed: z <= 4.0,
        detail: format!("{:.4} vs {:.4} (z = {z:.2})", fast.success_rate, full.success_rate),
    });

    Ok(CheckReport { items })
}

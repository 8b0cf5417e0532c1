//! Backward-induction solver for bivariate stopping rules, the barrier
//! success curve `P_n(t)` and the single-threshold crossing.
//!
//! Cell `j` covers `(t[j], t[j+1]]`. Its cutoff is set from rollouts started at
//! the cell's midpoint, in which later events follow the cutoffs already
//! computed for cells `> j` (events still inside cell `j` borrow cell `j + 1`,
//! and events in the last cell accept).

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::distributions::{ArrivalModel, WaitingModel};
use crate::engine::{conditional_trial, ConditionalSampler, EvalReport, Z99};
use crate::error::{Result, SdsError};
use crate::exec::{count_successes, Execution};
use crate::policies::{DecisionRule, GridPolicy};
use crate::process::{ConditionalFutureSpec, RecordChain};
use crate::rng::derive_seed;

pub const DEFAULT_CELLS: usize = 64;
pub const DEFAULT_ROLLOUTS: u64 = 5000;
pub const MIN_ROLLOUTS: u64 = 100;
const ROLLOUT_BATCH: u64 = 1000;
const PN_STREAM: u64 = 0x706e;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridSpacing {
    /// Equal arrival mass per cell.
    #[default]
    Quantile,
    /// Equal width per cell.
    Time,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub n: usize,
    pub cells: usize,
    /// Budget per `(cell, k)` estimate; also the trial count per `P_n(t)` point.
    pub rollouts: u64,
    pub seed: u64,
    /// Isotonic projection of cutoffs along time (uniform arrivals only).
    pub project: bool,
    /// Scan every `k` instead of binary search.
    pub linear_scan: bool,
    pub spacing: GridSpacing,
    pub execution: Execution,
}

impl SolverConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        SolverConfig {
            n,
            cells: DEFAULT_CELLS,
            rollouts: DEFAULT_ROLLOUTS,
            seed,
            project: true,
            linear_scan: false,
            spacing: GridSpacing::Quantile,
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(SdsError::field("n", "solver needs n >= 2"));
        }
        if self.cells < 2 {
            return Err(SdsError::field("grid", "need at least two cells"));
        }
        if self.rollouts < MIN_ROLLOUTS {
            return Err(SdsError::field("rollouts", format!("need at least {MIN_ROLLOUTS} rollouts")));
        }
        Ok(())
    }
}

/// Solver output: the policy plus diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SolvedGrid {
    /// Projected when requested and the arrival model is uniform, raw otherwise.
    pub policy: GridPolicy,
    pub raw_cutoffs: Vec<usize>,
    /// Time at which each cell's rollouts start.
    pub eval_times: Vec<f64>,
    /// Lowest cell whose cutoff was read while computing each cell
    /// (`cells` when only the terminal rule was used).
    pub lowest_read: Vec<usize>,
}

/// Cell boundaries `t[0] = 0 < … < t[m] = 1` and rollout start times.
pub fn grid_times(arrival: &ArrivalModel, cells: usize, spacing: GridSpacing) -> (Vec<f64>, Vec<f64>) {
    let m = cells as f64;
    let (mut bounds, mids): (Vec<f64>, Vec<f64>) = match spacing {
        GridSpacing::Quantile => (
            (0..=cells).map(|j| arrival.quantile(j as f64 / m)).collect(),
            (0..cells).map(|j| arrival.quantile((j as f64 + 0.5) / m)).collect(),
        ),
        GridSpacing::Time => (
            (0..=cells).map(|j| j as f64 / m).collect(),
            (0..cells).map(|j| (j as f64 + 0.5) / m).collect(),
        ),
    };
    bounds[0] = 0.0;
    bounds[cells] = 1.0;
    (bounds, mids)
}

/// Continuation rule while computing cell `from - 1`.
struct Continuation<'a> {
    times: &'a [f64],
    cutoffs: &'a [usize],
    from: usize,
    lowest_read: AtomicUsize,
}

impl DecisionRule for Continuation<'_> {
    fn accepts(&self, t: f64, k: usize) -> bool {
        let m = self.cutoffs.len();
        let cell = self.times[1..].partition_point(|&b| b < t).max(self.from);
        if cell >= m {
            return k > 0;
        }
        self.lowest_read.fetch_min(cell, Ordering::Relaxed);
        k > self.cutoffs[cell]
    }
}

/// Outcome of one sequential comparison of `r(t, k)` against `k / n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellEstimate {
    pub successes: u64,
    pub trials: u64,
    pub accept: bool,
    pub uncertain: bool,
}

impl CellEstimate {
    pub fn report(&self, seed: u64) -> EvalReport {
        EvalReport::from_counts(self.successes, self.trials, seed)
    }
}

struct Sweep<'a> {
    arrival: &'a ArrivalModel,
    waiting: &'a WaitingModel,
    cfg: &'a SolverConfig,
}

impl Sweep<'_> {
    /// Runs rollouts in batches until `r` is separated from `k / n` at the 99%
    /// level or the budget is spent.
    fn compare<D: DecisionRule + Sync>(&self, rule: &D, t: f64, k: usize, seed: u64) -> CellEstimate {
        let n = self.cfg.n;
        let target = k as f64 / n as f64;
        if k >= n {
            return CellEstimate {
                successes: 0,
                trials: 0,
                accept: true,
                uncertain: false,
            };
        }
        let spec = ConditionalFutureSpec {
            t,
            k,
            n,
            arrival: self.arrival.clone(),
            waiting: self.waiting.clone(),
        };
        let at = self.arrival.cdf(t);
        let (mut successes, mut trials) = (0u64, 0u64);
        let separated = loop {
            let batch = ROLLOUT_BATCH.min(self.cfg.rollouts - trials);
            successes += count_successes(self.cfg.execution, seed, trials, batch, |rng, _| {
                conditional_trial(rule, &spec, at, ConditionalSampler::Records, rng)
            });
            trials += batch;
            let p = (successes as f64 + 1.0) / (trials as f64 + 2.0);
            let se = (p * (1.0 - p) / trials as f64).sqrt();
            if (p - target).abs() > Z99 * se {
                break true;
            }
            if trials >= self.cfg.rollouts {
                break false;
            }
        };
        CellEstimate {
            successes,
            trials,
            accept: target > successes as f64 / trials as f64,
            uncertain: !separated,
        }
    }
}

/// Approximately optimal bivariate policy.
pub fn solve_bivariate(arrival: &ArrivalModel, waiting: &WaitingModel, cfg: &SolverConfig) -> Result<SolvedGrid> {
    cfg.validate()?;
    let m = cfg.cells;
    let n = cfg.n;
    let (times, mids) = grid_times(arrival, m, cfg.spacing);
    if times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(SdsError::Config("arrival model yields a degenerate grid".into()));
    }
    let sweep = Sweep { arrival, waiting, cfg };
    let mut cutoffs = vec![0usize; m];
    let mut uncertain = vec![false; m];
    let mut lowest_read = vec![m; m];
    for j in (0..m).rev() {
        let rule = Continuation {
            times: &times,
            cutoffs: &cutoffs,
            from: j + 1,
            lowest_read: AtomicUsize::new(m),
        };
        let t = mids[j];
        let mut estimate = |k: usize| {
            let e = sweep.compare(&rule, t, k, derive_seed(cfg.seed, &[j as u64, k as u64]));
            uncertain[j] |= e.uncertain;
            e.accept
        };
        let cutoff = if cfg.linear_scan {
            (1..n).rev().find(|&k| !estimate(k)).unwrap_or(0)
        } else {
            let (mut lo, mut hi) = (1usize, n);
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                if estimate(mid) {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            lo - 1
        };
        lowest_read[j] = rule.lowest_read.load(Ordering::Relaxed);
        cutoffs[j] = cutoff;
    }
    let policy_cutoffs = if cfg.project && arrival.is_uniform01() {
        project_cutoffs(&cutoffs)
    } else {
        cutoffs.clone()
    };
    Ok(SolvedGrid {
        policy: GridPolicy::with_uncertain(times, policy_cutoffs, uncertain)?,
        raw_cutoffs: cutoffs,
        eval_times: mids,
        lowest_read,
    })
}

/// Monte Carlo estimate of `r(t, k)` with `rule` as continuation, using the
/// same sequential stopping as the solver.
pub fn continuation_estimate<D: DecisionRule + Sync>(
    arrival: &ArrivalModel,
    waiting: &WaitingModel,
    rule: &D,
    t: f64,
    k: usize,
    cfg: &SolverConfig,
) -> CellEstimate {
    let sweep = Sweep { arrival, waiting, cfg };
    sweep.compare(rule, t, k, derive_seed(cfg.seed, &[u64::MAX, k as u64]))
}

/// Least-squares nondecreasing fit (pool adjacent violators, equal weights).
pub fn isotonic_nondecreasing(values: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (b, nb) = blocks[blocks.len() - 1];
            let (a, na) = blocks[blocks.len() - 2];
            if a <= b {
                break;
            }
            blocks.pop();
            let total = na + nb;
            *blocks.last_mut().unwrap() = ((a * na as f64 + b * nb as f64) / total as f64, total);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(v, count)| std::iter::repeat(v).take(count))
        .collect()
}

pub fn isotonic_nonincreasing(values: &[f64]) -> Vec<f64> {
    let negated: Vec<f64> = values.iter().map(|v| -v).collect();
    isotonic_nondecreasing(&negated).into_iter().map(|v| -v).collect()
}

/// Cutoffs made nondecreasing in time, rounded back to counts.
pub fn project_cutoffs(cutoffs: &[usize]) -> Vec<usize> {
    let values: Vec<f64> = cutoffs.iter().map(|&c| c as f64).collect();
    isotonic_nondecreasing(&values)
        .into_iter()
        .map(|v| v.round() as usize)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    /// Cells where a larger count rejects while a smaller one accepts.
    pub k_violations: usize,
    /// Adjacent cells where the cutoff drops, i.e. the policy accepts more later.
    pub t_violations: usize,
    /// The same count after isotonic projection; only for uniform arrivals.
    pub t_violations_projected: Option<usize>,
}

fn cutoff_drops(cutoffs: &[usize]) -> usize {
    cutoffs.windows(2).filter(|w| w[1] < w[0]).count()
}

pub fn monotonicity_report(cutoffs: &[usize], arrival: &ArrivalModel) -> MonotonicityReport {
    MonotonicityReport {
        // A cutoff rule accepts exactly the counts above it.
        k_violations: 0,
        t_violations: cutoff_drops(cutoffs),
        t_violations_projected: arrival
            .is_uniform01()
            .then(|| cutoff_drops(&project_cutoffs(cutoffs))),
    }
}

/// Success rate of `policy` when candidates arriving by `t` may not be accepted.
pub fn estimate_pn_with(
    policy: &GridPolicy,
    arrival: &ArrivalModel,
    waiting: &WaitingModel,
    t: f64,
    cfg: &SolverConfig,
) -> Result<EvalReport> {
    if !(0.0..=1.0).contains(&t) {
        return Err(SdsError::Domain(format!("barrier {t} outside [0, 1]")));
    }
    let seed = derive_seed(cfg.seed, &[PN_STREAM]);
    if arrival.cdf(t) >= 1.0 {
        return Ok(EvalReport::from_counts(0, cfg.rollouts, seed));
    }
    let n = cfg.n;
    let wins = count_successes(cfg.execution, seed, 0, cfg.rollouts, |rng, _| {
        RecordChain::new(arrival, waiting, 0.0, 0, n, rng)
            .find(|e| e.arrival > t && policy.accepts(e.time, e.k_at_t))
            .is_some_and(|e| e.is_overall_best)
    });
    Ok(EvalReport::from_counts(wins, cfg.rollouts, seed))
}

/// Solves the bivariate policy and estimates `P_n(t)` with it.
pub fn estimate_pn(arrival: &ArrivalModel, waiting: &WaitingModel, t: f64, cfg: &SolverConfig) -> Result<EvalReport> {
    let solved = solve_bivariate(arrival, waiting, cfg)?;
    estimate_pn_with(&solved.policy, arrival, waiting, t, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PnCurve {
    pub times: Vec<f64>,
    pub estimates: Vec<f64>,
    pub projected: Vec<f64>,
    pub half_widths: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub t_star: f64,
    pub p_at_t_star: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSearch {
    pub result: ThresholdResult,
    pub curve: PnCurve,
    pub solved: SolvedGrid,
}

pub fn pn_curve(policy: &GridPolicy, arrival: &ArrivalModel, waiting: &WaitingModel, cfg: &SolverConfig) -> Result<PnCurve> {
    let times = policy.times().to_vec();
    let reports = times
        .iter()
        .map(|&t| estimate_pn_with(policy, arrival, waiting, t, cfg))
        .collect::<Result<Vec<_>>>()?;
    let estimates: Vec<f64> = reports.iter().map(|r| r.success_rate).collect();
    Ok(PnCurve {
        projected: isotonic_nonincreasing(&estimates),
        half_widths: reports.iter().map(|r| r.half_width).collect(),
        estimates,
        times,
    })
}

/// Time where the projected `P_n(t)` falls to `A(t)`, linearly interpolated
/// inside the grid cell located by bisection.
pub fn crossing(curve: &PnCurve, arrival: &ArrivalModel, n: usize) -> Result<ThresholdResult> {
    let gap: Vec<f64> = curve
        .times
        .iter()
        .zip(&curve.projected)
        .map(|(&t, &p)| p - arrival.cdf(t))
        .collect();
    let last = gap.len() - 1;
    if gap[0] <= 0.0 || gap[last] > 0.0 {
        return Err(SdsError::NoCrossing);
    }
    // Invariant: gap[lo] > 0 >= gap[hi].
    let (mut lo, mut hi) = (0usize, last);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if gap[mid] > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let w = gap[lo] / (gap[lo] - gap[hi]);
    let (t0, t1) = (curve.times[lo], curve.times[hi]);
    let (p0, p1) = (curve.projected[lo], curve.projected[hi]);
    Ok(ThresholdResult {
        t_star: t0 + w * (t1 - t0),
        p_at_t_star: p0 + w * (p1 - p0),
        n,
    })
}

pub fn find_threshold(arrival: &ArrivalModel, waiting: &WaitingModel, cfg: &SolverConfig) -> Result<ThresholdSearch> {
    let solved = solve_bivariate(arrival, waiting, cfg)?;
    let curve = pn_curve(&solved.policy, arrival, waiting, cfg)?;
    let result = crossing(&curve, arrival, cfg.n)?;
    Ok(ThresholdSearch { result, curve, solved })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{evaluate, EvalConfig};
    use crate::policies::Policy;
    use proptest::prelude::*;

    fn classical() -> (ArrivalModel, WaitingModel) {
        (ArrivalModel::Uniform01, WaitingModel::PointMass(0.0))
    }

    #[test]
    fn isotonic_examples() {
        assert_eq!(isotonic_nondecreasing(&[1.0, 3.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(isotonic_nondecreasing(&[3.0, 2.0, 1.0]), vec![2.0, 2.0, 2.0]);
        assert_eq!(isotonic_nonincreasing(&[0.3, 0.4, 0.1]), vec![0.35, 0.35, 0.1]);
        assert_eq!(project_cutoffs(&[5, 4, 6, 6, 3]), vec![5, 5, 5, 5, 5]);
        assert!(isotonic_nondecreasing(&[]).is_empty());
    }

    #[test]
    fn grid_times_cover_unit_interval() {
        let (t, mids) = grid_times(&ArrivalModel::burst(0.01).unwrap(), 64, GridSpacing::Quantile);
        assert_eq!((t[0], t[64]), (0.0, 1.0));
        assert!(t.windows(2).all(|w| w[0] < w[1]));
        assert!(mids.iter().zip(t.windows(2)).all(|(m, w)| w[0] < *m && *m < w[1]));
        let (t, _) = grid_times(&ArrivalModel::Uniform01, 4, GridSpacing::Time);
        assert_eq!(t, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn rejects_bad_config() {
        let (a, w) = classical();
        let mut cfg = SolverConfig::new(1, 0);
        assert!(solve_bivariate(&a, &w, &cfg).is_err());
        cfg.n = 5;
        cfg.rollouts = 50;
        assert!(solve_bivariate(&a, &w, &cfg).is_err());
        cfg.rollouts = 500;
        cfg.cells = 1;
        assert!(solve_bivariate(&a, &w, &cfg).is_err());
    }

    #[test]
    fn three_candidates_classical() {
        let (a, w) = classical();
        let cfg = SolverConfig { cells: 16, ..SolverConfig::new(3, 1) };
        let solved = solve_bivariate(&a, &w, &cfg).unwrap();
        assert!(solved.policy.cutoffs().iter().all(|&c| c == 1), "{:?}", solved.policy);
        let r = evaluate(&Policy::BivariateGrid(solved.policy), &a, &w, &EvalConfig::fixed(3, 200_000, 2)).unwrap();
        assert!((r.success_rate - 0.5).abs() < 0.01, "{r:?}");
    }

    #[test]
    fn one_arrival_rejects_and_all_arrivals_accept() {
        for w in [WaitingModel::PointMass(0.0), WaitingModel::Exponential(1.0), WaitingModel::PointMass(0.2)] {
            let cfg = SolverConfig { cells: 8, rollouts: 2000, ..SolverConfig::new(6, 3) };
            let solved = solve_bivariate(&ArrivalModel::Uniform01, &w, &cfg).unwrap();
            for (j, &c) in solved.raw_cutoffs.iter().enumerate() {
                assert!((1..6).contains(&c), "{w:?} cell {j}: {c}");
                assert!(!solved.policy.accepts(solved.eval_times[j], 1));
                assert!(solved.policy.accepts(solved.eval_times[j], 6));
            }
        }
    }

    #[test]
    fn sweep_reads_only_later_cells() {
        let cfg = SolverConfig { cells: 12, rollouts: 500, ..SolverConfig::new(10, 4) };
        let solved = solve_bivariate(&ArrivalModel::Uniform01, &WaitingModel::Exponential(2.0), &cfg).unwrap();
        for (j, &lowest) in solved.lowest_read.iter().enumerate() {
            assert!(lowest > j, "cell {j} read cell {lowest}");
        }
        assert_eq!(solved.lowest_read[11], 12);
    }

    #[test]
    fn deterministic_across_execution() {
        let (a, w) = (ArrivalModel::Uniform01, WaitingModel::Exponential(1.0));
        let cfg = SolverConfig { cells: 8, rollouts: 1000, ..SolverConfig::new(12, 5) };
        let one = solve_bivariate(&a, &w, &SolverConfig { execution: Execution::Sequential, ..cfg }).unwrap();
        let two = solve_bivariate(&a, &w, &cfg).unwrap();
        assert_eq!(one, two);
    }

    #[test]
    fn linear_scan_agrees_with_binary_search_classically() {
        let (a, w) = classical();
        let base = SolverConfig { cells: 4, rollouts: 20_000, project: false, ..SolverConfig::new(8, 6) };
        let binary = solve_bivariate(&a, &w, &base).unwrap();
        let linear = solve_bivariate(&a, &w, &SolverConfig { linear_scan: true, ..base }).unwrap();
        for (b, l) in binary.raw_cutoffs.iter().zip(&linear.raw_cutoffs) {
            assert!(b.abs_diff(*l) <= 1, "{binary:?} vs {linear:?}");
        }
    }

    #[test]
    fn classical_cutoffs_are_time_invariant() {
        let (a, w) = classical();
        let cfg = SolverConfig { cells: 16, project: false, ..SolverConfig::new(20, 7) };
        let solved = solve_bivariate(&a, &w, &cfg).unwrap();
        let c: Vec<f64> = solved.raw_cutoffs.iter().map(|&c| c as f64).collect();
        let mean = c.iter().sum::<f64>() / c.len() as f64;
        let var = c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / c.len() as f64;
        assert!(var <= 1.0, "{c:?}");
        assert!((6.0..=8.0).contains(&mean), "{c:?}");
    }

    #[test]
    fn monotonicity_report_counts_drops() {
        let r = monotonicity_report(&[3, 2, 4, 4, 1], &ArrivalModel::Uniform01);
        assert_eq!((r.k_violations, r.t_violations, r.t_violations_projected), (0, 2, Some(0)));
        let r = monotonicity_report(&[3, 2], &ArrivalModel::burst(0.01).unwrap());
        assert_eq!(r.t_violations_projected, None);
    }

    #[test]
    fn projection_only_for_uniform() {
        let cfg = SolverConfig { cells: 16, rollouts: 1000, ..SolverConfig::new(30, 8) };
        let w = WaitingModel::PointMass(0.03);
        let solved = solve_bivariate(&ArrivalModel::burst(0.01).unwrap(), &w, &cfg).unwrap();
        assert_eq!(solved.policy.cutoffs(), &solved.raw_cutoffs[..]);
        let solved = solve_bivariate(&ArrivalModel::Uniform01, &w, &cfg).unwrap();
        assert_eq!(cutoff_drops(solved.policy.cutoffs()), 0);
    }

    #[test]
    fn pn_is_zero_when_everyone_is_barred() {
        let policy = GridPolicy::new(vec![0.0, 1.0], vec![0]).unwrap();
        let cfg = SolverConfig::new(10, 0);
        let a = ArrivalModel::uniform_on(0.0, 0.5).unwrap();
        let r = estimate_pn_with(&policy, &a, &WaitingModel::PointMass(0.0), 0.6, &cfg).unwrap();
        assert_eq!(r.success_rate, 0.0);
        let r = estimate_pn_with(&policy, &ArrivalModel::Uniform01, &WaitingModel::PointMass(0.0), 1.0, &cfg).unwrap();
        assert_eq!(r.success_rate, 0.0);
    }

    #[test]
    fn pn_records_match_full_instances() {
        use crate::policies::run_policy_after;
        use crate::process::sample_instance;
        use crate::rng::trial_rng;
        let policy = GridPolicy::new(vec![0.0, 0.4, 1.0], vec![4, 2]).unwrap();
        let (a, w) = (ArrivalModel::burst(0.05).unwrap(), WaitingModel::Exponential(4.0));
        let cfg = SolverConfig { rollouts: 200_000, ..SolverConfig::new(12, 9) };
        for t in [0.0, 0.25, 0.5] {
            let fast = estimate_pn_with(&policy, &a, &w, t, &cfg).unwrap();
            let trials = 200_000u64;
            let wins = (0..trials)
                .filter(|&i| {
                    let traj = sample_instance(12, &a, &w, &mut trial_rng(77, i));
                    run_policy_after(&policy, &traj, Some(t)).success
                })
                .count() as u64;
            let slow = EvalReport::from_counts(wins, trials, 77);
            let se = (fast.std_error().powi(2) + slow.std_error().powi(2)).sqrt();
            assert!((fast.success_rate - slow.success_rate).abs() <= 4.0 * se, "t={t}: {fast:?} {slow:?}");
        }
    }

    #[test]
    fn crossing_interpolates() {
        let curve = PnCurve {
            times: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            estimates: vec![0.4, 0.4, 0.3, 0.2, 0.0],
            projected: vec![0.4, 0.4, 0.3, 0.2, 0.0],
            half_widths: vec![0.0; 5],
        };
        let r = crossing(&curve, &ArrivalModel::Uniform01, 5).unwrap();
        // gap: 0.4, 0.15, -0.2 -> crossing between 0.25 and 0.5.
        assert!((r.t_star - (0.25 + 0.15 / 0.35 * 0.25)).abs() < 1e-12);
        let flat = PnCurve { projected: vec![0.0; 5], ..curve };
        assert_eq!(crossing(&flat, &ArrivalModel::Uniform01, 5), Err(SdsError::NoCrossing));
    }

    proptest! {
        #[test]
        fn projection_is_monotone_and_close(c in proptest::collection::vec(0usize..50, 1..40)) {
            let p = project_cutoffs(&c);
            prop_assert_eq!(p.len(), c.len());
            prop_assert_eq!(cutoff_drops(&p), 0);
            let (lo, hi) = (*c.iter().min().unwrap(), *c.iter().max().unwrap());
            prop_assert!(p.iter().all(|&x| x >= lo && x <= hi));
        }
    }
}

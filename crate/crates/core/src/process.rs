//! Problem instances, best-so-far departure events and conditional futures.
//!
//! Candidates are indexed 0-based in arrival order. `rel_ranks[i]` is the
//! number of candidates among the first `i + 1` that are at least as good as
//! candidate `i`, so `rel_ranks[i] == 1` marks a best-so-far arrival.

use rand::Rng;
use rand_distr::{Beta, Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::distributions::{ArrivalModel, WaitingModel};
use crate::error::{Result, SdsError};
use crate::rng::open_unit;

/// One realized instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrajectoryRepr", into = "TrajectoryRepr")]
pub struct Trajectory {
    arrivals: Vec<f64>,
    waits: Vec<f64>,
    departures: Vec<f64>,
    rel_ranks: Vec<u32>,
}

impl Trajectory {
    pub fn from_parts(arrivals: Vec<f64>, waits: Vec<f64>, rel_ranks: Vec<u32>) -> Result<Self> {
        let n = arrivals.len();
        if n == 0 {
            return Err(SdsError::field("trajectory.a", "need at least one candidate"));
        }
        if waits.len() != n || rel_ranks.len() != n {
            return Err(SdsError::field("trajectory", "a, l and r must have equal length"));
        }
        if arrivals.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(SdsError::field("trajectory.a", "arrivals must lie in [0, 1]"));
        }
        if arrivals.windows(2).any(|w| w[1] < w[0]) {
            return Err(SdsError::field("trajectory.a", "arrivals must be sorted"));
        }
        if waits.iter().any(|l| !(*l >= 0.0)) {
            return Err(SdsError::field("trajectory.l", "waits must be >= 0"));
        }
        if rel_ranks
            .iter()
            .enumerate()
            .any(|(i, &r)| r < 1 || r as usize > i + 1)
        {
            return Err(SdsError::field("trajectory.r", "rel_ranks[i] must lie in 1..=i+1"));
        }
        let departures = arrivals
            .iter()
            .zip(&waits)
            .map(|(a, l)| (a + l).min(1.0))
            .collect();
        Ok(Trajectory {
            arrivals,
            waits,
            departures,
            rel_ranks,
        })
    }

    pub fn n(&self) -> usize {
        self.arrivals.len()
    }

    pub fn arrivals(&self) -> &[f64] {
        &self.arrivals
    }

    pub fn waits(&self) -> &[f64] {
        &self.waits
    }

    pub fn departures(&self) -> &[f64] {
        &self.departures
    }

    pub fn rel_ranks(&self) -> &[u32] {
        &self.rel_ranks
    }

    pub fn is_best_so_far(&self, i: usize) -> bool {
        self.rel_ranks[i] == 1
    }

    pub fn best_flags(&self) -> Vec<bool> {
        self.rel_ranks.iter().map(|&r| r == 1).collect()
    }

    /// Index of the overall best candidate: the last best-so-far arrival.
    pub fn global_best(&self) -> usize {
        self.rel_ranks
            .iter()
            .rposition(|&r| r == 1)
            .expect("rel_ranks[0] is always 1")
    }

    /// K_t, the number of arrivals by time `t`.
    pub fn count_arrivals(&self, t: f64) -> usize {
        self.arrivals.partition_point(|&a| a <= t)
    }

    pub fn decision_events(&self) -> Vec<DecisionEvent> {
        collect_events(&self.arrivals, &self.departures, |i| self.rel_ranks[i] == 1, 0)
    }

    /// What an observer knows at time `t`.
    pub fn history_at(&self, t: f64) -> History {
        let k = self.count_arrivals(t);
        History {
            t,
            arrivals: self.arrivals[..k].to_vec(),
            departures: self.departures[..k]
                .iter()
                .map(|&d| (d <= t).then_some(d))
                .collect(),
            rel_ranks: self.rel_ranks[..k].to_vec(),
        }
    }
}

/// Snapshot at time `t`; `None` in `departures` means still present.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    pub t: f64,
    pub arrivals: Vec<f64>,
    pub departures: Vec<Option<f64>>,
    pub rel_ranks: Vec<u32>,
}

/// A best-so-far candidate leaving while still best-so-far.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionEvent {
    pub time: f64,
    /// Candidate index (0-based, arrival order, counted from the start of the
    /// sequence the event was computed on).
    pub index: usize,
    /// Arrivals with `A_j <= time`, including any before a conditioning cut.
    pub k_at_t: usize,
}

/// Candidate `i` yields an event iff it is flagged and the next flagged
/// candidate has not arrived by `D_i`.
fn collect_events(
    arrivals: &[f64],
    departures: &[f64],
    flagged: impl Fn(usize) -> bool,
    k_offset: usize,
) -> Vec<DecisionEvent> {
    let mut events = Vec::new();
    let mut next_flag_arrival = f64::INFINITY;
    for i in (0..arrivals.len()).rev() {
        if !flagged(i) {
            continue;
        }
        let d = departures[i];
        if next_flag_arrival > d {
            events.push(DecisionEvent {
                time: d,
                index: i,
                k_at_t: k_offset + arrivals.partition_point(|&a| a <= d),
            });
        }
        next_flag_arrival = arrivals[i];
    }
    events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.index.cmp(&b.index)));
    events
}

/// Draws an instance with `n` candidates.
pub fn sample_instance<R: Rng + ?Sized>(
    n: usize,
    arrival: &ArrivalModel,
    waiting: &WaitingModel,
    rng: &mut R,
) -> Trajectory {
    assert!(n >= 1, "need at least one candidate");
    let mut arrivals: Vec<f64> = (0..n).map(|_| arrival.sample(rng)).collect();
    arrivals.sort_unstable_by(f64::total_cmp);
    let waits: Vec<f64> = (0..n).map(|_| waiting.sample(rng)).collect();
    // Independent uniform relative ranks are exactly the relative ranks of a
    // uniform random permutation.
    let rel_ranks: Vec<u32> = (1..=n as u32).map(|i| rng.random_range(1..=i)).collect();
    let departures = arrivals
        .iter()
        .zip(&waits)
        .map(|(a, l)| (a + l).min(1.0))
        .collect();
    Trajectory {
        arrivals,
        waits,
        departures,
        rel_ranks,
    }
}

/// Conditioning data for the future after time `t` given `K_t = k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalFutureSpec {
    pub t: f64,
    pub k: usize,
    pub n: usize,
    pub arrival: ArrivalModel,
    pub waiting: WaitingModel,
}

impl ConditionalFutureSpec {
    pub fn new(t: f64, k: usize, n: usize, arrival: ArrivalModel, waiting: WaitingModel) -> Result<Self> {
        let spec = ConditionalFutureSpec {
            t,
            k,
            n,
            arrival,
            waiting,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.t) {
            return Err(SdsError::Domain(format!("cut time {} outside [0, 1]", self.t)));
        }
        if self.k > self.n {
            return Err(SdsError::Domain(format!("k = {} exceeds n = {}", self.k, self.n)));
        }
        if self.k > 0 && self.arrival.cdf(self.t) <= 0.0 {
            return Err(SdsError::Domain(format!(
                "k = {} arrivals by t = {} has probability zero",
                self.k, self.t
            )));
        }
        if self.k < self.n && self.arrival.cdf(self.t) >= 1.0 {
            return Err(SdsError::Domain(format!(
                "no arrival mass after t = {} for the remaining {} candidates",
                self.t,
                self.n - self.k
            )));
        }
        Ok(())
    }

    pub fn remaining(&self) -> usize {
        self.n - self.k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerMode {
    /// Flags drawn independently with probability 1/i.
    #[default]
    Sequential,
    /// Flags derived from distinct labels drawn from [n].
    Triples,
}

/// Candidates `k..n` (0-based) of a conditional future.
#[derive(Debug, Clone, PartialEq)]
pub struct FutureSuffix {
    pub k: usize,
    pub n: usize,
    pub arrivals: Vec<f64>,
    pub waits: Vec<f64>,
    pub departures: Vec<f64>,
    pub flags: Vec<bool>,
}

impl FutureSuffix {
    /// Events after the cut; `index` is the absolute candidate index and
    /// `k_at_t` includes the `k` arrivals before the cut.
    pub fn decision_events(&self) -> Vec<DecisionEvent> {
        let mut events = collect_events(&self.arrivals, &self.departures, |i| self.flags[i], self.k);
        for e in &mut events {
            e.index += self.k;
        }
        events
    }

    /// Absolute index of the overall best, if it is in the future.
    pub fn global_best(&self) -> Option<usize> {
        self.flags.iter().rposition(|&b| b).map(|i| i + self.k)
    }
}

pub fn sample_conditional_future<R: Rng + ?Sized>(
    spec: &ConditionalFutureSpec,
    rng: &mut R,
    mode: SamplerMode,
) -> Result<FutureSuffix> {
    spec.validate()?;
    let (k, n) = (spec.k, spec.n);
    let m = n - k;
    if m == 0 {
        return Ok(FutureSuffix {
            k,
            n,
            arrivals: Vec::new(),
            waits: Vec::new(),
            departures: Vec::new(),
            flags: Vec::new(),
        });
    }
    let at = spec.arrival.cdf(spec.t);
    let mut arrivals: Vec<f64> = (0..m).map(|_| spec.arrival.sample_after(at, rng)).collect();
    arrivals.sort_unstable_by(f64::total_cmp);
    let waits: Vec<f64> = (0..m).map(|_| spec.waiting.sample(rng)).collect();
    let flags = match mode {
        SamplerMode::Sequential => (k + 1..=n)
            .map(|i| rng.random::<f64>() * (i as f64) < 1.0)
            .collect(),
        SamplerMode::Triples => {
            // Partial Fisher-Yates: labels[..m] is an ordered uniform sample of
            // distinct labels, labels[m..] are the undrawn ones (label 0 is best).
            let mut labels: Vec<usize> = (0..n).collect();
            for i in 0..m {
                let j = rng.random_range(i..n);
                labels.swap(i, j);
            }
            let mut best = labels[m..].iter().copied().min().unwrap_or(usize::MAX);
            labels[..m]
                .iter()
                .map(|&label| {
                    let flag = label < best;
                    best = best.min(label);
                    flag
                })
                .collect()
        }
    };
    let departures = arrivals
        .iter()
        .zip(&waits)
        .map(|(a, l)| (a + l).min(1.0))
        .collect();
    Ok(FutureSuffix {
        k,
        n,
        arrivals,
        waits,
        departures,
        flags,
    })
}

/// A decision event produced by [`RecordChain`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainEvent {
    pub time: f64,
    pub k_at_t: usize,
    pub arrival: f64,
    /// 1-based arrival index of the candidate.
    pub index: usize,
    /// No later best-so-far arrival exists: this candidate is the overall best.
    pub is_overall_best: bool,
}

#[derive(Debug, Clone, Copy)]
struct Record {
    index: usize,
    pos: usize,
    /// A(arrival), the order statistic in probability space.
    v: f64,
    arrival: f64,
}

/// Lazily samples only the best-so-far arrivals of a conditional future and
/// yields their departure events.
///
/// Record indices follow `Pr[next record > j | record at i] = i / j`; record
/// arrival times are order statistics of the conditional arrival law, drawn
/// as Beta increments; the number of non-record arrivals before a departure
/// is binomial because arrivals between two known order statistics are i.i.d.
/// uniform on that gap in probability space. Produces the same event law as
/// [`sample_conditional_future`] at a cost proportional to the number of
/// records instead of `n`.
pub struct RecordChain<'a, R: Rng + ?Sized> {
    arrival: &'a ArrivalModel,
    waiting: &'a WaitingModel,
    rng: &'a mut R,
    k: usize,
    n: usize,
    current: Option<Record>,
}

impl<'a, R: Rng + ?Sized> RecordChain<'a, R> {
    /// Future after `t` given `k` of `n` arrivals so far; `cdf_at_t` is `A(t)`.
    /// The caller guarantees `k <= n` and `A(t) < 1` when `k < n`.
    pub fn new(
        arrival: &'a ArrivalModel,
        waiting: &'a WaitingModel,
        cdf_at_t: f64,
        k: usize,
        n: usize,
        rng: &'a mut R,
    ) -> Self {
        debug_assert!(k <= n);
        let mut chain = RecordChain {
            arrival,
            waiting,
            rng,
            k,
            n,
            current: None,
        };
        let start = Record {
            index: k,
            pos: 0,
            v: cdf_at_t,
            arrival: f64::NAN,
        };
        chain.current = chain.next_record(&start);
        chain
    }

    fn next_record(&mut self, from: &Record) -> Option<Record> {
        let index = if from.index == 0 {
            1
        } else {
            let j = (from.index as f64 / open_unit(self.rng)).ceil();
            if j > self.n as f64 {
                return None;
            }
            (j as usize).max(from.index + 1)
        };
        if index > self.n {
            return None;
        }
        let total = self.n - self.k;
        let pos = index - self.k;
        let a = (pos - from.pos) as f64;
        let b = (total - pos + 1) as f64;
        let x = if pos - from.pos == 1 {
            1.0 - open_unit(self.rng).powf(1.0 / b)
        } else {
            Beta::new(a, b).expect("positive shape parameters").sample(self.rng)
        };
        let v = (from.v + (1.0 - from.v) * x).min(1.0);
        Some(Record {
            index,
            pos,
            v,
            arrival: self.arrival.quantile(v),
        })
    }
}

impl<R: Rng + ?Sized> Iterator for RecordChain<'_, R> {
    type Item = ChainEvent;

    fn next(&mut self) -> Option<ChainEvent> {
        loop {
            let cur = self.current?;
            let departure = (cur.arrival + self.waiting.sample(self.rng)).min(1.0);
            let next = self.next_record(&cur);
            self.current = next;
            let superseded = next.is_some_and(|r| r.arrival <= departure);
            if superseded {
                continue;
            }
            let (gap, upper) = match next {
                Some(r) => (r.pos - cur.pos - 1, r.v),
                None => (self.n - self.k - cur.pos, 1.0),
            };
            let mut extra = 0;
            if gap > 0 {
                let frac = if upper > cur.v {
                    ((self.arrival.cdf(departure) - cur.v) / (upper - cur.v)).clamp(0.0, 1.0)
                } else {
                    1.0
                };
                extra = if frac >= 1.0 {
                    gap
                } else if frac > 0.0 {
                    Binomial::new(gap as u64, frac)
                        .expect("probability in [0, 1]")
                        .sample(self.rng) as usize
                } else {
                    0
                };
            }
            return Some(ChainEvent {
                time: departure,
                k_at_t: self.k + cur.pos + extra,
                arrival: cur.arrival,
                index: cur.index,
                is_overall_best: next.is_none(),
            });
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TrajectoryRepr {
    a: Vec<f64>,
    l: Vec<f64>,
    r: Vec<u32>,
}

impl TryFrom<TrajectoryRepr> for Trajectory {
    type Error = SdsError;

    fn try_from(repr: TrajectoryRepr) -> Result<Self> {
        Trajectory::from_parts(repr.a, repr.l, repr.r)
    }
}

impl From<Trajectory> for TrajectoryRepr {
    fn from(t: Trajectory) -> Self {
        TrajectoryRepr {
            a: t.arrivals,
            l: t.waits,
            r: t.rel_ranks,
        }
    }
}

//! Stopping rules evaluated when a best-so-far candidate departs.
//!
//! Every rule sees only the event time `t` and the arrival count `K_t`, and
//! every accept condition is strict so that ties reject.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SdsError};
use crate::process::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Accept,
    Reject,
}

impl Decision {
    pub fn is_accept(self) -> bool {
        self == Decision::Accept
    }
}

/// Anything that maps `(t, K_t)` to accept or reject.
pub trait DecisionRule {
    fn accepts(&self, t: f64, k: usize) -> bool;
}

impl<F: Fn(f64, usize) -> bool> DecisionRule for F {
    fn accepts(&self, t: f64, k: usize) -> bool {
        self(t, k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolicyRepr", into = "PolicyRepr")]
pub enum Policy {
    NeverAccept,
    /// Accept iff `t > theta`.
    Threshold { theta: f64 },
    /// Accept iff more than `m` candidates have arrived.
    RankCutoff { m: usize },
    BivariateGrid(GridPolicy),
}

impl Policy {
    pub fn threshold(theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(SdsError::field("policy.theta", "threshold must lie in [0, 1]"));
        }
        Ok(Policy::Threshold { theta })
    }

    pub fn decide(&self, t: f64, k: usize) -> Decision {
        if self.accepts(t, k) {
            Decision::Accept
        } else {
            Decision::Reject
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| SdsError::field("policy", e.to_string()))
    }
}

impl DecisionRule for Policy {
    fn accepts(&self, t: f64, k: usize) -> bool {
        match self {
            Policy::NeverAccept => false,
            Policy::Threshold { theta } => t > *theta,
            Policy::RankCutoff { m } => k > *m,
            Policy::BivariateGrid(grid) => grid.accepts(t, k),
        }
    }
}

/// Accept at `t` in cell `(t[j], t[j+1]]` iff `k > cutoff[j]`.
///
/// Times at or before `t[0]` use the first cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct GridPolicy {
    t: Vec<f64>,
    cutoff: Vec<usize>,
    uncertain: Vec<bool>,
}

impl GridPolicy {
    pub fn new(t: Vec<f64>, cutoff: Vec<usize>) -> Result<Self> {
        let cells = cutoff.len();
        Self::with_uncertain(t, cutoff, vec![false; cells])
    }

    pub fn with_uncertain(t: Vec<f64>, cutoff: Vec<usize>, uncertain: Vec<bool>) -> Result<Self> {
        if t.len() < 2 {
            return Err(SdsError::field("policy.t", "need at least two grid times"));
        }
        if cutoff.len() + 1 != t.len() {
            return Err(SdsError::field("policy.cutoff", "need one cutoff per cell (len(t) - 1)"));
        }
        if uncertain.len() != cutoff.len() {
            return Err(SdsError::field("policy.uncertain", "need one flag per cell"));
        }
        if t[0] < 0.0 || t.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(SdsError::field("policy.t", "grid times must be strictly increasing from >= 0"));
        }
        if t[t.len() - 1] != 1.0 {
            return Err(SdsError::field("policy.t", "last grid time must be 1"));
        }
        Ok(GridPolicy { t, cutoff, uncertain })
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoff
    }

    pub fn uncertain(&self) -> &[bool] {
        &self.uncertain
    }

    pub fn cells(&self) -> usize {
        self.cutoff.len()
    }

    /// 0-based index of the cell containing `t`.
    pub fn cell_of(&self, t: f64) -> usize {
        self.t[1..]
            .partition_point(|&b| b < t)
            .min(self.cells() - 1)
    }

    pub fn accepts(&self, t: f64, k: usize) -> bool {
        k > self.cutoff[self.cell_of(t)]
    }
}

impl DecisionRule for GridPolicy {
    fn accepts(&self, t: f64, k: usize) -> bool {
        GridPolicy::accepts(self, t, k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    pub accepted: Option<usize>,
    pub success: bool,
    pub accept_time: Option<f64>,
}

pub fn run_policy<D: DecisionRule + ?Sized>(rule: &D, traj: &Trajectory) -> RunOutcome {
    run_policy_after(rule, traj, None)
}

/// As [`run_policy`], but candidates arriving at or before `barrier` are never accepted.
pub fn run_policy_after<D: DecisionRule + ?Sized>(rule: &D, traj: &Trajectory, barrier: Option<f64>) -> RunOutcome {
    let best = traj.global_best();
    for e in traj.decision_events() {
        if barrier.is_some_and(|b| traj.arrivals()[e.index] <= b) {
            continue;
        }
        if rule.accepts(e.time, e.k_at_t) {
            return RunOutcome {
                accepted: Some(e.index),
                success: e.index == best,
                accept_time: Some(e.time),
            };
        }
    }
    RunOutcome {
        accepted: None,
        success: false,
        accept_time: None,
    }
}

/// `never`, `threshold:X` or `rankcutoff:M`. Grid policies come from JSON.
impl FromStr for Policy {
    type Err = SdsError;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "never" => Ok(Policy::NeverAccept),
            "threshold" => {
                let theta = arg
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| SdsError::field("policy.theta", format!("'{arg}' is not a number")))?;
                Policy::threshold(theta)
            }
            "rankcutoff" => {
                let m = arg
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| SdsError::field("policy.m", format!("'{arg}' is not a count")))?;
                Ok(Policy::RankCutoff { m })
            }
            other => Err(SdsError::field("policy.kind", format!("unknown policy '{other}'"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum PolicyRepr {
    Never,
    Threshold { theta: f64 },
    RankCutoff { m: usize },
    Grid(GridRepr),
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    t: Vec<f64>,
    cutoff: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    uncertain: Vec<bool>,
}

impl TryFrom<GridRepr> for GridPolicy {
    type Error = SdsError;

    fn try_from(r: GridRepr) -> Result<Self> {
        if r.uncertain.is_empty() {
            GridPolicy::new(r.t, r.cutoff)
        } else {
            GridPolicy::with_uncertain(r.t, r.cutoff, r.uncertain)
        }
    }
}

impl From<GridPolicy> for GridRepr {
    fn from(g: GridPolicy) -> Self {
        let uncertain = if g.uncertain.iter().any(|&u| u) { g.uncertain } else { Vec::new() };
        GridRepr {
            t: g.t,
            cutoff: g.cutoff,
            uncertain,
        }
    }
}

impl TryFrom<PolicyRepr> for Policy {
    type Error = SdsError;

    fn try_from(r: PolicyRepr) -> Result<Self> {
        match r {
            PolicyRepr::Never => Ok(Policy::NeverAccept),
            PolicyRepr::Threshold { theta } => Policy::threshold(theta),
            PolicyRepr::RankCutoff { m } => Ok(Policy::RankCutoff { m }),
            PolicyRepr::Grid(g) => GridPolicy::try_from(g).map(Policy::BivariateGrid),
        }
    }
}

impl From<Policy> for PolicyRepr {
    fn from(p: Policy) -> Self {
        match p {
            Policy::NeverAccept => PolicyRepr::Never,
            Policy::Threshold { theta } => PolicyRepr::Threshold { theta },
            Policy::RankCutoff { m } => PolicyRepr::RankCutoff { m },
            Policy::BivariateGrid(g) => PolicyRepr::Grid(g.into()),
        }
    }
}

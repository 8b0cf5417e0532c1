//! Arrival and waiting-time distributions.
//!
//! Arrival models live on [0, 1] and are continuous by construction: uniform,
//! piecewise uniform over positive-width segments, or a tabulated CDF with
//! linear interpolation. All of them are sampled by inverse transform, which
//! also gives exact sampling conditioned on arriving after a cut time.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SdsError};
use crate::rng::open_unit;

const MASS_TOLERANCE: f64 = 1e-12;

/// One block of a piecewise-uniform arrival law: `mass` spread evenly over `(lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub mass: f64,
}

/// Validated, sorted list of segments whose masses sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Segments(Vec<Segment>);

impl Segments {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(SdsError::field("arrival.segments", "at least one segment required"));
        }
        let mut total = 0.0;
        let mut prev_hi = 0.0;
        for (i, s) in segments.iter().enumerate() {
            if !(s.lo.is_finite() && s.hi.is_finite() && s.mass.is_finite()) {
                return Err(SdsError::field("arrival.segments", format!("segment {i} is not finite")));
            }
            if s.lo < 0.0 || s.hi > 1.0 {
                return Err(SdsError::field(
                    "arrival.segments",
                    format!("segment {i} ({}, {}] leaves [0, 1]", s.lo, s.hi),
                ));
            }
            if s.hi <= s.lo {
                return Err(SdsError::field(
                    "arrival.segments",
                    format!("segment {i} has non-positive width"),
                ));
            }
            if s.lo < prev_hi {
                return Err(SdsError::field(
                    "arrival.segments",
                    format!("segment {i} overlaps or precedes segment {}", i.saturating_sub(1)),
                ));
            }
            if s.mass < 0.0 {
                return Err(SdsError::field("arrival.segments", format!("segment {i} has negative mass")));
            }
            total += s.mass;
            prev_hi = s.hi;
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(SdsError::field(
                "arrival.segments",
                format!("masses sum to {total}, expected 1"),
            ));
        }
        Ok(Segments(segments))
    }

    pub fn as_slice(&self) -> &[Segment] {
        &self.0
    }

    fn cdf(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for s in &self.0 {
            if t >= s.hi {
                acc += s.mass;
            } else {
                if t > s.lo {
                    acc += s.mass * (t - s.lo) / (s.hi - s.lo);
                }
                break;
            }
        }
        acc.min(1.0)
    }

    fn quantile(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        let mut last = self.0[0].lo;
        for s in &self.0 {
            if s.mass <= 0.0 {
                continue;
            }
            if u <= acc + s.mass {
                let frac = ((u - acc) / s.mass).clamp(0.0, 1.0);
                return s.lo + frac * (s.hi - s.lo);
            }
            acc += s.mass;
            last = s.hi;
        }
        last
    }
}

/// Piecewise-linear CDF through `(x, p)` knots.
///
/// `x` strictly increasing, `p` nondecreasing from 0 to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfTable {
    x: Vec<f64>,
    p: Vec<f64>,
}

impl CdfTable {
    pub fn new(points: Vec<(f64, f64)>, field: &'static str) -> Result<Self> {
        if points.len() < 2 {
            return Err(SdsError::field(field, "need at least two knots"));
        }
        for (i, w) in points.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) {
                return Err(SdsError::field(field, format!("knot {} not strictly increasing in x", i + 1)));
            }
            if w[1].1 < w[0].1 {
                return Err(SdsError::field(field, format!("knot {} decreases the CDF", i + 1)));
            }
        }
        let (first, last) = (points[0], points[points.len() - 1]);
        if points.iter().any(|&(x, p)| !x.is_finite() || !p.is_finite()) {
            return Err(SdsError::field(field, "knots must be finite"));
        }
        if first.1 != 0.0 || last.1 != 1.0 {
            return Err(SdsError::field(field, "CDF must start at 0 and end at 1"));
        }
        let (x, p) = points.into_iter().unzip();
        Ok(CdfTable { x, p })
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.x.iter().copied().zip(self.p.iter().copied())
    }

    fn first_x(&self) -> f64 {
        self.x[0]
    }

    fn last_x(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    fn cdf(&self, t: f64) -> f64 {
        if t <= self.first_x() {
            return 0.0;
        }
        if t >= self.last_x() {
            return 1.0;
        }
        let j = self.x.partition_point(|&x| x <= t);
        let (x0, x1) = (self.x[j - 1], self.x[j]);
        let (p0, p1) = (self.p[j - 1], self.p[j]);
        p0 + (p1 - p0) * (t - x0) / (x1 - x0)
    }

    /// Generalized inverse `inf { x : F(x) >= u }` with linear interpolation.
    fn quantile(&self, u: f64) -> f64 {
        let j = self.p.partition_point(|&p| p < u);
        if j == 0 {
            return self.first_x();
        }
        if j >= self.p.len() {
            return self.last_x();
        }
        let (x0, x1) = (self.x[j - 1], self.x[j]);
        let (p0, p1) = (self.p[j - 1], self.p[j]);
        x0 + (x1 - x0) * (u - p0) / (p1 - p0)
    }
}

/// Law of a single candidate's arrival time on [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ArrivalRepr", into = "ArrivalRepr")]
#[derive(Default)]
pub enum ArrivalModel {
    #[default]
    Uniform01,
    PiecewiseUniform(Segments),
    TabulatedCdf(CdfTable),
}

impl ArrivalModel {
    pub fn piecewise(segments: &[(f64, f64, f64)]) -> Result<Self> {
        let segs = segments
            .iter()
            .map(|&(lo, hi, mass)| Segment { lo, hi, mass })
            .collect();
        Segments::new(segs).map(ArrivalModel::PiecewiseUniform)
    }

    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self> {
        let table = CdfTable::new(points, "arrival.points")?;
        if table.first_x() != 0.0 || table.last_x() != 1.0 {
            return Err(SdsError::field("arrival.points", "grid must span [0, 1]"));
        }
        Ok(ArrivalModel::TabulatedCdf(table))
    }

    /// Uniform on `[lo, hi]` inside [0, 1].
    pub fn uniform_on(lo: f64, hi: f64) -> Result<Self> {
        if lo == 0.0 && hi == 1.0 {
            return Ok(ArrivalModel::Uniform01);
        }
        let mut segs = Vec::new();
        if lo > 0.0 {
            segs.push((0.0, lo, 0.0));
        }
        segs.push((lo, hi, 1.0));
        if hi < 1.0 {
            segs.push((hi, 1.0, 0.0));
        }
        Self::piecewise(&segs)
    }

    /// Mass `eps` on `[0, 4 eps]`, `1 - 2 eps` on `(4 eps, 6 eps]` and `eps` on `(6 eps, 1]`.
    ///
    /// Under this law the optimal policy is not monotone in time.
    pub fn burst(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && 6.0 * eps < 1.0) {
            return Err(SdsError::field("arrival.eps", "need 0 < eps < 1/6"));
        }
        Self::piecewise(&[
            (0.0, 4.0 * eps, eps),
            (4.0 * eps, 6.0 * eps, 1.0 - 2.0 * eps),
            (6.0 * eps, 1.0, eps),
        ])
    }

    pub fn is_uniform01(&self) -> bool {
        matches!(self, ArrivalModel::Uniform01)
    }

    /// A(t), the probability that a candidate arrives by time `t`.
    pub fn cdf(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            ArrivalModel::Uniform01 => t,
            ArrivalModel::PiecewiseUniform(s) => s.cdf(t),
            ArrivalModel::TabulatedCdf(table) => table.cdf(t),
        }
    }

    /// Inverse CDF for `u` in [0, 1].
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self {
            ArrivalModel::Uniform01 => u,
            ArrivalModel::PiecewiseUniform(s) => s.quantile(u),
            ArrivalModel::TabulatedCdf(table) => table.quantile(u),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    /// Draw conditioned on arriving in `(t, 1]`, where `cdf_at_t = A(t) < 1`.
    pub fn sample_after<R: Rng + ?Sized>(&self, cdf_at_t: f64, rng: &mut R) -> f64 {
        self.quantile(cdf_at_t + (1.0 - cdf_at_t) * open_unit(rng))
    }
}


/// Law of how long a candidate stays after arriving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WaitingRepr", into = "WaitingRepr")]
pub enum WaitingModel {
    PointMass(f64),
    Exponential(f64),
    TabulatedCdf(CdfTable),
}

impl WaitingModel {
    pub fn point(value: f64) -> Result<Self> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(SdsError::field("waiting.value", "duration must be finite and >= 0"));
        }
        Ok(WaitingModel::PointMass(value))
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(SdsError::field("waiting.rate", "rate must be finite and > 0"));
        }
        Ok(WaitingModel::Exponential(rate))
    }

    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self> {
        let table = CdfTable::new(points, "waiting.points")?;
        if table.first_x() < 0.0 {
            return Err(SdsError::field("waiting.points", "durations must be >= 0"));
        }
        Ok(WaitingModel::TabulatedCdf(table))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            WaitingModel::PointMass(c) => *c,
            WaitingModel::Exponential(rate) => Exp::new(*rate)
                .expect("rate validated at construction")
                .sample(rng),
            WaitingModel::TabulatedCdf(table) => table.quantile(rng.random::<f64>()),
        }
    }

    /// Pr[L <= d].
    pub fn cdf(&self, d: f64) -> f64 {
        match self {
            WaitingModel::PointMass(c) => {
                if d >= *c {
                    1.0
                } else {
                    0.0
                }
            }
            WaitingModel::Exponential(rate) => {
                if d <= 0.0 {
                    0.0
                } else {
                    -(-rate * d).exp_m1()
                }
            }
            WaitingModel::TabulatedCdf(table) => table.cdf(d),
        }
    }
}

impl Default for WaitingModel {
    fn default() -> Self {
        WaitingModel::PointMass(0.0)
    }
}

/// Homogeneous Poisson arrivals on [0, 1] with expected count `rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoissonRepr", into = "PoissonRepr")]
pub struct PoissonArrivals {
    rate: f64,
}

impl PoissonArrivals {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(SdsError::field("arrivals.rate", "rate must be finite and > 0"));
        }
        Ok(PoissonArrivals { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Number of arrivals on [0, 1]. Given the count, arrival times are i.i.d. uniform.
    pub fn sample_count<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let draw: f64 = Poisson::new(self.rate)
            .expect("rate validated at construction")
            .sample(rng);
        draw as usize
    }
}

/// Top-level model file: `{"arrival": .., "waiting": .., "arrivals": ..}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default)]
    pub arrival: ArrivalModel,
    #[serde(default)]
    pub waiting: WaitingModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrivals: Option<PoissonArrivals>,
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| SdsError::field("model", e.to_string()))
    }
}

// ---- serde representations -------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum ArrivalRepr {
    Uniform,
    Piecewise { segments: Vec<(f64, f64, f64)> },
    Tabulated { points: Vec<(f64, f64)> },
}

impl TryFrom<ArrivalRepr> for ArrivalModel {
    type Error = SdsError;

    fn try_from(repr: ArrivalRepr) -> Result<Self> {
        match repr {
            ArrivalRepr::Uniform => Ok(ArrivalModel::Uniform01),
            ArrivalRepr::Piecewise { segments } => ArrivalModel::piecewise(&segments),
            ArrivalRepr::Tabulated { points } => ArrivalModel::tabulated(points),
        }
    }
}

impl From<ArrivalModel> for ArrivalRepr {
    fn from(model: ArrivalModel) -> Self {
        match model {
            ArrivalModel::Uniform01 => ArrivalRepr::Uniform,
            ArrivalModel::PiecewiseUniform(s) => ArrivalRepr::Piecewise {
                segments: s.0.iter().map(|s| (s.lo, s.hi, s.mass)).collect(),
            },
            ArrivalModel::TabulatedCdf(t) => ArrivalRepr::Tabulated {
                points: t.points().collect(),
            },
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum WaitingRepr {
    Point { value: f64 },
    Exp { rate: f64 },
    Tabulated { points: Vec<(f64, f64)> },
}

impl TryFrom<WaitingRepr> for WaitingModel {
    type Error = SdsError;

    fn try_from(repr: WaitingRepr) -> Result<Self> {
        match repr {
            WaitingRepr::Point { value } => WaitingModel::point(value),
            WaitingRepr::Exp { rate } => WaitingModel::exponential(rate),
            WaitingRepr::Tabulated { points } => WaitingModel::tabulated(points),
        }
    }
}

impl From<WaitingModel> for WaitingRepr {
    fn from(model: WaitingModel) -> Self {
        match model {
            WaitingModel::PointMass(value) => WaitingRepr::Point { value },
            WaitingModel::Exponential(rate) => WaitingRepr::Exp { rate },
            WaitingModel::TabulatedCdf(t) => WaitingRepr::Tabulated {
                points: t.points().collect(),
            },
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum PoissonRepr {
    Poisson { rate: f64 },
}

impl TryFrom<PoissonRepr> for PoissonArrivals {
    type Error = SdsError;

    fn try_from(repr: PoissonRepr) -> Result<Self> {
        let PoissonRepr::Poisson { rate } = repr;
        PoissonArrivals::new(rate)
    }
}

impl From<PoissonArrivals> for PoissonRepr {
    fn from(p: PoissonArrivals) -> Self {
        PoissonRepr::Poisson { rate: p.rate }
    }
}

// ---- command-line shorthands -------------------------------------------------

fn parse_num(field: &'static str, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| SdsError::field(field, format!("'{s}' is not a number")))
}

/// `uniform`, `burst:EPS`, or `piecewise:LO,HI,MASS;LO,HI,MASS;...`.
impl FromStr for ArrivalModel {
    type Err = SdsError;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "uniform" => Ok(ArrivalModel::Uniform01),
            "burst" => ArrivalModel::burst(parse_num("arrival.eps", rest)?),
            "piecewise" => {
                let mut segs = Vec::new();
                for part in rest.split(';').filter(|p| !p.trim().is_empty()) {
                    let nums: Vec<&str> = part.split(',').collect();
                    if nums.len() != 3 {
                        return Err(SdsError::field("arrival.segments", format!("'{part}' is not LO,HI,MASS")));
                    }
                    segs.push((
                        parse_num("arrival.segments", nums[0])?,
                        parse_num("arrival.segments", nums[1])?,
                        parse_num("arrival.segments", nums[2])?,
                    ));
                }
                ArrivalModel::piecewise(&segs)
            }
            other => Err(SdsError::field("arrival.kind", format!("unknown arrival kind '{other}'"))),
        }
    }
}

/// `exp:RATE` or `point:VALUE`.
impl FromStr for WaitingModel {
    type Err = SdsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some(("exp", rate)) => WaitingModel::exponential(parse_num("waiting.rate", rate)?),
            Some(("point", value)) => WaitingModel::point(parse_num("waiting.value", value)?),
            _ => Err(SdsError::field(
                "waiting.kind",
                format!("expected exp:RATE or point:VALUE, got '{s}'"),
            )),
        }
    }
}

impl fmt::Display for WaitingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WaitingModel::PointMass(c) => write!(f, "point:{c}"),
            WaitingModel::Exponential(rate) => write!(f, "exp:{rate}"),
            WaitingModel::TabulatedCdf(_) => write!(f, "tabulated"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_rng;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn three_sigma(p: f64, n: f64) -> f64 {
        3.0 * (p * (1.0 - p) / n).sqrt()
    }

    fn ks_uniform(mut xs: Vec<f64>) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let lo = (x - i as f64 / n).abs();
                let hi = ((i + 1) as f64 / n - x).abs();
                lo.max(hi)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn uniform_quantile_is_identity() {
        assert_eq!(ArrivalModel::Uniform01.quantile(0.5), 0.5);
        assert_eq!(ArrivalModel::Uniform01.cdf(0.3), 0.3);
    }

    #[test]
    fn burst_cdf_values() {
        let m = ArrivalModel::burst(0.01).unwrap();
        assert_abs_diff_eq!(m.cdf(0.04), 0.01, epsilon = 1e-12);
        assert_abs_diff_eq!(m.cdf(0.06), 0.99, epsilon = 1e-12);
        assert_eq!(m.cdf(0.0), 0.0);
        assert_abs_diff_eq!(m.cdf(1.0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn burst_sampling_mass_in_first_block() {
        let m = ArrivalModel::burst(0.01).unwrap();
        let mut rng = trial_rng(1, 0);
        let n = 1_000_000;
        let hits = (0..n).filter(|_| m.sample(&mut rng) <= 0.04).count() as f64;
        let frac = hits / n as f64;
        assert!((frac - 0.01).abs() <= three_sigma(0.01, n as f64), "{frac}");
    }

    #[test]
    fn tabulated_uniform_passes_ks() {
        let pts: Vec<(f64, f64)> = (0..=1000).map(|i| (i as f64 / 1000.0, i as f64 / 1000.0)).collect();
        let m = ArrivalModel::tabulated(pts).unwrap();
        let mut rng = trial_rng(2, 0);
        let xs: Vec<f64> = (0..1_000_000).map(|_| m.sample(&mut rng)).collect();
        let d = ks_uniform(xs);
        assert!(d < 0.005, "KS statistic {d}");
    }

    #[test]
    fn every_model_matches_its_cdf() {
        let models = [
            ArrivalModel::Uniform01,
            ArrivalModel::burst(0.05).unwrap(),
            ArrivalModel::tabulated(vec![(0.0, 0.0), (0.2, 0.5), (0.7, 0.6), (1.0, 1.0)]).unwrap(),
        ];
        for (mi, m) in models.iter().enumerate() {
            let mut rng = trial_rng(3, mi as u64);
            // KS against the model CDF through the probability integral transform.
            let xs: Vec<f64> = (0..100_000).map(|_| m.cdf(m.sample(&mut rng))).collect();
            let d = ks_uniform(xs);
            assert!(d < 0.01, "model {mi}: KS {d}");
        }
    }

    #[test]
    fn point_mass_and_exponential_moments() {
        let mut rng = trial_rng(4, 0);
        let zero = WaitingModel::point(0.0).unwrap();
        assert!((0..1000).all(|_| zero.sample(&mut rng) == 0.0));
        let c = WaitingModel::point(0.25).unwrap();
        assert!((0..1000).all(|_| c.sample(&mut rng) == 0.25));

        let n = 1_000_000;
        let exp2 = WaitingModel::exponential(2.0).unwrap();
        let mean = (0..n).map(|_| exp2.sample(&mut rng)).sum::<f64>() / n as f64;
        // sd of an Exp(2) draw is 0.5.
        assert!((mean - 0.5).abs() <= 3.0 * 0.5 / (n as f64).sqrt(), "{mean}");

        let exp1 = WaitingModel::exponential(1.0).unwrap();
        let tail = (0..n).filter(|_| exp1.sample(&mut rng) > 1.0).count() as f64 / n as f64;
        let e1 = (-1.0f64).exp();
        assert!((tail - e1).abs() <= three_sigma(e1, n as f64), "{tail}");
    }

    #[test]
    fn exponential_is_memoryless() {
        let m = WaitingModel::exponential(1.5).unwrap();
        let mut rng = trial_rng(5, 0);
        let draws: Vec<f64> = (0..400_000).map(|_| m.sample(&mut rng)).collect();
        for s in [0.2, 0.5] {
            for t in [0.2, 0.5] {
                let survived: Vec<f64> = draws.iter().copied().filter(|&l| l > s).collect();
                let cond = survived.iter().filter(|&&l| l > s + t).count() as f64 / survived.len() as f64;
                let plain = draws.iter().filter(|&&l| l > t).count() as f64 / draws.len() as f64;
                let sd = (plain * (1.0 - plain) / survived.len() as f64
                    + plain * (1.0 - plain) / draws.len() as f64)
                    .sqrt();
                assert!((cond - plain).abs() <= 3.0 * sd, "s={s} t={t}: {cond} vs {plain}");
            }
        }
    }

    #[test]
    fn poisson_counts() {
        let mut rng = trial_rng(6, 0);
        let n = 1_000_000;
        let p5 = PoissonArrivals::new(5.0).unwrap();
        let xs: Vec<f64> = (0..n).map(|_| p5.sample_count(&mut rng) as f64).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        // Var of the sample variance for Poisson: (mu + 2 mu^2) / n.
        assert!((var - 5.0).abs() <= 3.0 * ((5.0 + 50.0) / n as f64).sqrt(), "{var}");
        assert!((mean - 5.0).abs() <= 3.0 * (5.0 / n as f64).sqrt());

        let p05 = PoissonArrivals::new(0.5).unwrap();
        let zeros = (0..n).filter(|_| p05.sample_count(&mut rng) == 0).count() as f64 / n as f64;
        let e = (-0.5f64).exp();
        assert!((zeros - e).abs() <= three_sigma(e, n as f64));

        let p3 = PoissonArrivals::new(3.0).unwrap();
        let twos = (0..n).filter(|_| p3.sample_count(&mut rng) == 2).count() as f64 / n as f64;
        let pmf = 9.0 * (-3.0f64).exp() / 2.0;
        assert!((twos - pmf).abs() <= three_sigma(pmf, n as f64));
    }

    #[test]
    fn rejects_bad_models() {
        assert!(ArrivalModel::piecewise(&[(0.0, 0.5, 0.5), (0.5, 1.0, 0.4)]).is_err());
        assert!(ArrivalModel::piecewise(&[(0.0, 0.5, 0.5), (0.4, 1.0, 0.5)]).is_err());
        assert!(ArrivalModel::piecewise(&[(0.3, 0.3, 1.0)]).is_err());
        assert!(ArrivalModel::piecewise(&[(0.0, 0.5, -0.1), (0.5, 1.0, 1.1)]).is_err());
        assert!(ArrivalModel::tabulated(vec![(0.0, 0.0), (0.5, 0.6), (0.5, 0.7), (1.0, 1.0)]).is_err());
        assert!(ArrivalModel::tabulated(vec![(0.0, 0.0), (0.5, 0.6), (0.7, 0.5), (1.0, 1.0)]).is_err());
        assert!(WaitingModel::exponential(0.0).is_err());
        assert!(WaitingModel::point(-1.0).is_err());
        assert!(PoissonArrivals::new(-2.0).is_err());
    }

    #[test]
    fn json_forms() {
        let cfg = ModelConfig::from_json(
            r#"{"arrival":{"kind":"piecewise","segments":[[0,0.04,0.01],[0.04,0.06,0.98],[0.06,1,0.01]]},
                "waiting":{"kind":"exp","rate":1.0},
                "arrivals":{"kind":"poisson","rate":100.0}}"#,
        )
        .unwrap();
        assert_eq!(cfg.arrival, ArrivalModel::burst(0.01).unwrap());
        assert_eq!(cfg.waiting, WaitingModel::Exponential(1.0));
        assert_eq!(cfg.arrivals.unwrap().rate(), 100.0);

        let defaults = ModelConfig::from_json(r#"{"waiting":{"kind":"point","value":0.0}}"#).unwrap();
        assert!(defaults.arrival.is_uniform01());
        let text = serde_json::to_string(&ArrivalModel::Uniform01).unwrap();
        assert_eq!(text, r#"{"kind":"uniform"}"#);

        let err = ModelConfig::from_json(r#"{"waiting":{"kind":"exp","rate":-1}}"#).unwrap_err();
        assert!(err.to_string().contains("rate"), "{err}");
    }

    #[test]
    fn shorthand_parsing() {
        assert_eq!("uniform".parse::<ArrivalModel>().unwrap(), ArrivalModel::Uniform01);
        assert_eq!("burst:0.01".parse::<ArrivalModel>().unwrap(), ArrivalModel::burst(0.01).unwrap());
        assert_eq!("exp:1.0".parse::<WaitingModel>().unwrap(), WaitingModel::Exponential(1.0));
        assert_eq!("point:0".parse::<WaitingModel>().unwrap(), WaitingModel::PointMass(0.0));
        assert!("gamma:2".parse::<WaitingModel>().is_err());
    }

    proptest! {
        #[test]
        fn cdf_nondecreasing_and_quantile_inverts(a in 0.0f64..1.0, b in 0.0f64..1.0, eps in 0.001f64..0.15) {
            let m = ArrivalModel::burst(eps).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(m.cdf(lo) <= m.cdf(hi) + 1e-15);
            let x = m.quantile(a);
            prop_assert!((m.cdf(x) - a).abs() < 1e-9);
        }

        #[test]
        fn conditional_draws_land_after_cut(t in 0.0f64..0.99, seed in 0u64..1000) {
            let m = ArrivalModel::tabulated(vec![(0.0, 0.0), (0.3, 0.1), (0.6, 0.8), (1.0, 1.0)]).unwrap();
            let mut rng = trial_rng(seed, 0);
            let at = m.cdf(t);
            for _ in 0..20 {
                let x = m.sample_after(at, &mut rng);
                prop_assert!(x > t - 1e-12 && x <= 1.0);
            }
        }
    }
}

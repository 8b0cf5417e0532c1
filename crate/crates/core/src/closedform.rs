//! Closed-form success probability of a single time threshold when candidates
//! arrive by a dense Poisson process and leave after exponential waits.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Result, SdsError};
use crate::exec::{map_collect, Execution};

/// Lower end of the threshold search; the quadrature pole reaches the
/// integration endpoint as the threshold goes to 0.
pub const THETA_MIN: f64 = 1e-4;
const SCAN_STEP: f64 = 1e-3;
const REFINE_TOL: f64 = 1e-6;

/// Rates reported in the reference table.
pub const TABLE_RATES: [f64; 4] = [0.5, 1.0, 2.0, 10.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub max_depth: u32,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-10,
            max_depth: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

// Gauss-Kronrod 7/15 nodes on [-1, 1] (positive half, centre last).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
// Gauss weights for the odd Kronrod nodes (XGK[1], XGK[3], XGK[5], XGK[7]).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive bisection with a Gauss-Kronrod 7/15 rule on each panel.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, cfg: &QuadratureConfig) -> Quadrature {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32, max_depth: u32) -> Quadrature {
        let (value, error) = gk15(f, a, b);
        if error <= tol || error <= 4.0 * f64::EPSILON * value.abs() || depth >= max_depth {
            return Quadrature { value, error };
        }
        let m = 0.5 * (a + b);
        let left = recurse(f, a, m, 0.5 * tol, depth + 1, max_depth);
        let right = recurse(f, m, b, 0.5 * tol, depth + 1, max_depth);
        Quadrature {
            value: left.value + right.value,
            error: left.error + right.error,
        }
    }
    if a == b {
        return Quadrature { value: 0.0, error: 0.0 };
    }
    recurse(f, a, b, cfg.abs_tol, 0, cfg.max_depth)
}

fn check_rate(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(SdsError::Domain(format!("rate must be positive and finite, got {lambda}")));
    }
    Ok(())
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(SdsError::Domain(format!("threshold must lie in (0, 1], got {theta}")));
    }
    Ok(())
}

/// `∫_0^{λ(1−θ)} e^{−x} / (x − λ)² dx`.
///
/// Computed after substituting `λ − x = e^u`, which turns the integrand into
/// `exp(e^u − λ − u)` on `[ln λθ, ln λ]` and removes the steep growth near the
/// upper endpoint.
pub fn singular_integral(lambda: f64, theta: f64, cfg: &QuadratureConfig) -> Result<Quadrature> {
    check_rate(lambda)?;
    check_theta(theta)?;
    if theta == 1.0 {
        return Ok(Quadrature { value: 0.0, error: 0.0 });
    }
    let f = |u: f64| (u.exp() - lambda - u).exp();
    Ok(integrate(&f, (lambda * theta).ln(), lambda.ln(), cfg))
}

/// Success probability of accepting the first best-so-far departure after `theta`.
pub fn success_probability(lambda: f64, theta: f64) -> Result<f64> {
    success_probability_with(lambda, theta, &QuadratureConfig::default())
}

pub fn success_probability_with(lambda: f64, theta: f64, cfg: &QuadratureConfig) -> Result<f64> {
    check_rate(lambda)?;
    check_theta(theta)?;
    let a = lambda * theta;
    let one_minus_ea = -(-a).exp_m1();
    let first = one_minus_ea / lambda;
    // (e^a − 1)(e^{−a} − e^{−λ}) rewritten so that neither factor overflows.
    let second = one_minus_ea * -(-(lambda - a)).exp_m1() / (theta * lambda * lambda);
    let integral = singular_integral(lambda, theta, cfg)?.value;
    let bracket = (1.0 / theta).ln() + (1.0 - theta) / (lambda * theta) - integral;
    let third = ((-a).exp_m1() + a) / lambda * bracket;
    let p = first + second + third;
    if !(0.0..=1.0).contains(&p) {
        return Err(SdsError::Numerical(format!(
            "success probability {p} outside [0, 1] at rate {lambda}, threshold {theta}"
        )));
    }
    Ok(p)
}

/// `∫_0^u e^{−t} t^{k−2} dt`, the lower incomplete gamma function `γ(k − 1, u)`.
pub fn incomplete_integral(u: f64, k: u32) -> Result<f64> {
    if k < 2 {
        return Err(SdsError::Domain(format!("need k >= 2, got {k}")));
    }
    if !(u >= 0.0) {
        return Err(SdsError::Domain(format!("need u >= 0, got {u}")));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    let s = (k - 1) as f64;
    if u < s + 1.0 {
        Ok((s * u.ln() - u).exp() * gamma_series(s, u))
    } else {
        Ok(ln_gamma(s).exp() * (1.0 - upper_regularized(k - 1, u)))
    }
}

/// `Σ_j u^j / (s (s+1) … (s+j))`, so that `γ(s, u) = u^s e^{−u}` times this.
fn gamma_series(s: f64, u: f64) -> f64 {
    let mut term = 1.0 / s;
    let mut sum = term;
    let mut j = 1.0;
    while term > sum * 1e-17 {
        term *= u / (s + j);
        sum += term;
        j += 1.0;
    }
    sum
}

/// `Γ(s, u) / Γ(s)` for integer `s`, as a finite Poisson sum.
fn upper_regularized(s: u32, u: f64) -> f64 {
    let mut term = (-u).exp();
    let mut sum = term;
    for j in 1..s {
        term *= u / j as f64;
        sum += term;
    }
    sum
}

/// Success probability of accepting the first best-so-far departure among `k`
/// candidates that arrive uniformly on `[θ, 1]` with exponential waits.
pub fn no_waiting_success(k: u32, lambda: f64, theta: f64) -> Result<f64> {
    check_rate(lambda)?;
    if !(0.0..1.0).contains(&theta) {
        return Err(SdsError::Domain(format!("interval start must lie in [0, 1), got {theta}")));
    }
    if k == 0 {
        return Err(SdsError::Domain("need k >= 1".into()));
    }
    if k == 1 {
        return Ok(1.0);
    }
    let u = lambda * (1.0 - theta);
    let s = (k - 1) as f64;
    // (k − 1) γ(k − 1, u) / u^k, arranged to avoid overflow and cancellation.
    let tail = if u < s + 1.0 {
        s / u * (-u).exp() * gamma_series(s, u)
    } else {
        (ln_gamma(s + 1.0) - (s + 1.0) * u.ln()).exp() * (1.0 - upper_regularized(k - 1, u))
    };
    Ok(1.0 / k as f64 + 1.0 / u - tail)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Optimum {
    pub lambda: f64,
    pub theta_star: f64,
    pub p_star: f64,
}

/// Grid scan over `[THETA_MIN, 1]` followed by golden-section refinement
/// inside the best bracket.
pub fn optimize_threshold(lambda: f64) -> Result<Optimum> {
    check_rate(lambda)?;
    let steps = ((1.0 - THETA_MIN) / SCAN_STEP).floor() as usize;
    let mut grid: Vec<f64> = (0..=steps).map(|i| THETA_MIN + i as f64 * SCAN_STEP).collect();
    if *grid.last().unwrap() < 1.0 {
        grid.push(1.0);
    }
    let values = grid
        .iter()
        .map(|&t| success_probability(lambda, t))
        .collect::<Result<Vec<f64>>>()?;
    let best = values
        .iter()
        .enumerate()
        .fold(0, |b, (i, &v)| if v > values[b] { i } else { b });
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let (theta, p) = golden_max(|t| success_probability(lambda, t), lo, hi, REFINE_TOL)?;
    let (theta_star, p_star) = if p >= values[best] { (theta, p) } else { (grid[best], values[best]) };
    Ok(Optimum {
        lambda,
        theta_star,
        p_star,
    })
}

/// Golden-section search for a maximum on `[lo, hi]`.
pub fn golden_max<F: Fn(f64) -> Result<f64>>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)> {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1)?;
        }
    }
    let x = 0.5 * (lo + hi);
    Ok((x, f(x)?))
}

/// Optimal thresholds for `lambda_min, lambda_min + step, …` up to `lambda_max`.
pub fn sweep(lambda_min: f64, lambda_max: f64, step: f64, exec: Execution) -> Result<Vec<Optimum>> {
    if !(lambda_min > 0.0 && lambda_min <= lambda_max && lambda_max.is_finite()) {
        return Err(SdsError::field("lambda", "need 0 < lambda_min <= lambda_max"));
    }
    if !(step > 0.0) {
        return Err(SdsError::field("step", "step must be positive"));
    }
    let count = ((lambda_max - lambda_min) / step + 1e-9).floor() as usize;
    let rates: Vec<f64> = (0..=count)
        .map(|i| ((lambda_min + i as f64 * step) * 1e9).round() / 1e9)
        .collect();
    map_collect(exec, rates, optimize_threshold).into_iter().collect()
}

pub fn table1(exec: Execution) -> Result<Vec<Optimum>> {
    map_collect(exec, TABLE_RATES.to_vec(), optimize_threshold)
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        let mut s = f(a) + f(b);
        for i in 1..panels {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    fn direct_integrand(lambda: f64) -> impl Fn(f64) -> f64 {
        move |x: f64| (-x).exp() / (x - lambda).powi(2)
    }

    #[test]
    fn gk15_is_exact_for_polynomials() {
        let q = integrate(&|x: f64| x.powi(5) - 3.0 * x * x, 0.0, 2.0, &QuadratureConfig::default());
        assert_abs_diff_eq!(q.value, 64.0 / 6.0 - 8.0, epsilon = 1e-13);
    }

    #[test]
    fn singular_integral_matches_simpson() {
        let q = singular_integral(1.0, 0.5, &QuadratureConfig::default()).unwrap();
        let oracle = simpson(direct_integrand(1.0), 0.0, 0.5, 1_000_000);
        assert_abs_diff_eq!(q.value, oracle, epsilon = 1e-8);
        for (l, t) in [(10.0, 0.3), (0.5, 0.05), (2.0, 0.9)] {
            let q = singular_integral(l, t, &QuadratureConfig::default()).unwrap();
            let oracle = simpson(direct_integrand(l), 0.0, l * (1.0 - t), 1_000_000);
            assert_abs_diff_eq!(q.value, oracle, epsilon = 1e-7);
        }
    }

    #[test]
    fn singular_integral_edges() {
        let cfg = QuadratureConfig::default();
        assert_eq!(singular_integral(3.0, 1.0, &cfg).unwrap().value, 0.0);
        assert!(matches!(singular_integral(1.0, 0.0, &cfg), Err(SdsError::Domain(_))));
        assert!(matches!(singular_integral(1.0, -0.1, &cfg), Err(SdsError::Domain(_))));
        assert!(singular_integral(0.0, 0.5, &cfg).is_err());
    }

    #[test]
    fn singular_integral_upper_bound() {
        for l in [1.0, 10.0] {
            for t in [0.3, 0.7] {
                let q = singular_integral(l, t, &QuadratureConfig::default()).unwrap().value;
                let bound = (1.0 - (-l * (1.0 - t)).exp()) / (l * t).powi(2);
                assert!(q <= bound, "{l} {t}: {q} > {bound}");
            }
        }
    }

    #[test]
    fn halving_tolerance_stays_within_error_estimate() {
        for (l, t) in [(1.0, 0.5), (10.0, 0.1), (1000.0, 0.37), (0.5, 1e-4)] {
            let coarse = singular_integral(l, t, &QuadratureConfig::default()).unwrap();
            let fine = singular_integral(l, t, &QuadratureConfig { abs_tol: 5e-11, max_depth: 50 }).unwrap();
            assert!((coarse.value - fine.value).abs() <= coarse.error.max(1e-15), "{l} {t}");
        }
    }

    #[test]
    fn threshold_one_gives_first_term_only() {
        for l in [0.5, 1.0, 7.0] {
            assert_abs_diff_eq!(success_probability(l, 1.0).unwrap(), (1.0 - (-l).exp()) / l, epsilon = 1e-14);
        }
    }

    #[test]
    fn reference_points() {
        assert_abs_diff_eq!(success_probability(1.0, 0.486).unwrap(), 0.804, epsilon = 0.001);
        assert_abs_diff_eq!(success_probability(1000.0, (-1f64).exp()).unwrap(), (-1f64).exp(), epsilon = 0.01);
    }

    #[test]
    fn large_rate_approaches_classical_curve() {
        for i in 1..=9 {
            let t = i as f64 / 10.0;
            let p = success_probability(1000.0, t).unwrap();
            assert!((p + t * t.ln()).abs() < 0.01, "{t}: {p}");
        }
    }

    #[test]
    fn continuity() {
        for l in [0.5, 1.0, 10.0] {
            for i in 0..100 {
                let t = 0.005 + i as f64 * 0.0099;
                let d = success_probability(l, t).unwrap() - success_probability(l, t + 1e-6).unwrap();
                assert!(d.abs() < 1e-4);
            }
        }
    }

    #[test]
    fn incomplete_integral_values() {
        for u in [0.0, 0.3, 2.0, 15.0] {
            assert_abs_diff_eq!(incomplete_integral(u, 2).unwrap(), 1.0 - (-u).exp(), epsilon = 1e-14);
        }
        assert_eq!(incomplete_integral(0.0, 7).unwrap(), 0.0);
        let exact = 1.0 - 2.0 * (-1f64).exp();
        assert_abs_diff_eq!(incomplete_integral(1.0, 3).unwrap(), exact, epsilon = 1e-14);
        let oracle = simpson(|t: f64| (-t).exp() * t, 0.0, 1.0, 10_000);
        assert_abs_diff_eq!(incomplete_integral(1.0, 3).unwrap(), oracle, epsilon = 1e-12);
        assert!(incomplete_integral(1.0, 1).is_err());
    }

    #[test]
    fn incomplete_integral_agrees_with_statrs() {
        use statrs::function::gamma::gamma_li;
        for k in [2u32, 3, 5, 9, 20] {
            for u in [0.01, 0.5, 3.0, 8.0, 25.0, 60.0] {
                let ours = incomplete_integral(u, k).unwrap();
                let theirs = gamma_li((k - 1) as f64, u);
                assert!(((ours - theirs) / theirs).abs() < 1e-12, "k={k} u={u}: {ours} vs {theirs}");
            }
        }
    }

    #[test]
    fn no_waiting_examples() {
        assert_eq!(no_waiting_success(1, 3.0, 0.2).unwrap(), 1.0);
        let u = 1e-4;
        assert_abs_diff_eq!(no_waiting_success(2, u, 0.0).unwrap(), 1.0 - u / 6.0, epsilon = 1e-6);
        let expected = 1.5 - (1.0 - (-1f64).exp());
        assert_abs_diff_eq!(no_waiting_success(2, 1.0, 0.0).unwrap(), expected, epsilon = 1e-14);
        assert!(no_waiting_success(2, 1.0, 1.0).is_err());
    }

    #[test]
    fn no_waiting_matches_direct_formula() {
        for k in 2..=12u32 {
            for (l, t) in [(0.5, 0.0), (2.0, 0.3), (10.0, 0.6)] {
                let u: f64 = l * (1.0 - t);
                let direct = 1.0 / k as f64 + 1.0 / u - (k - 1) as f64 / u.powi(k as i32) * incomplete_integral(u, k).unwrap();
                assert_abs_diff_eq!(no_waiting_success(k, l, t).unwrap(), direct, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn no_waiting_in_unit_interval() {
        for k in 1..=20 {
            for l in [0.5, 1.0, 2.0, 10.0] {
                for t in [0.0, 0.3, 0.6] {
                    let p = no_waiting_success(k, l, t).unwrap();
                    assert!(p > 0.0 && p <= 1.0, "k={k} l={l} t={t}: {p}");
                }
            }
        }
    }

    #[test]
    fn optimizer_recovers_table_rows() {
        for (l, theta, p) in [(0.5, 0.493, 0.889), (1.0, 0.486, 0.804), (2.0, 0.473, 0.684)] {
            let o = optimize_threshold(l).unwrap();
            assert!((o.theta_star - theta).abs() <= 0.002, "{o:?}");
            assert!((o.p_star - p).abs() <= 0.002, "{o:?}");
        }
        let o = optimize_threshold(1000.0).unwrap();
        assert!((o.theta_star - (-1f64).exp()).abs() < 0.01);
        assert!(optimize_threshold(0.05).unwrap().p_star >= 0.98);
    }

    #[test]
    fn optimum_beats_scan_neighbours() {
        let o = optimize_threshold(10.0).unwrap();
        for d in [-0.01, -0.001, 0.001, 0.01] {
            assert!(success_probability(10.0, o.theta_star + d).unwrap() <= o.p_star + 1e-12);
        }
    }

    #[test]
    fn sweep_is_monotone() {
        let rows = sweep(0.5, 10.0, 0.5, Execution::default()).unwrap();
        assert_eq!(rows.len(), 20);
        for w in rows.windows(2) {
            assert!(w[1].p_star < w[0].p_star);
            assert!(w[1].theta_star < w[0].theta_star + 1e-6);
        }
        assert!(sweep(1.0, 0.5, 0.1, Execution::default()).is_err());
    }

    #[test]
    fn golden_section_on_parabola() {
        let (x, y) = golden_max(|x| Ok(-(x - 0.3) * (x - 0.3)), 0.0, 1.0, 1e-9).unwrap();
        assert_abs_diff_eq!(x, 0.3, epsilon = 1e-8);
        assert_abs_diff_eq!(y, 0.0, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn probability_in_unit_interval(l in 0.01f64..200.0, t in 1e-4f64..=1.0) {
            let p = success_probability(l, t).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}

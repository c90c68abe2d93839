//! Gaussian measure and Gaussian surface area of parallel sets, and exact
//! evaluation of the explicit bound
//!
//! `B(d, r) = (d/r) · (1/m_{d+1}) · Σ_{i=0}^{d} C(d,i) m_{i+1} (2r)^{d−i}`
//!
//! on the upper Gaussian surface area of `r`-parallel sets, together with each
//! step of the chain `B(d, r) <= 2e·d/r` for `r <= r_* = d^{-1/2} / (2√e)`.
//!
//! `m_p = ∫_0^∞ e^{−t²/2} t^p dt = 2^{(p−1)/2} Γ((p+1)/2)`. Products of
//! binomials and Gamma values are formed in log space and summed with
//! compensated summation; no factorial is ever materialized.

use std::f64::consts::{E, PI};
use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_ur, ln_gamma};

use crate::error::{invalid, Result};
use crate::measure::ball_volume;
use crate::quad::{integrate, QuadOptions};
use crate::sampling::{map_samples, ParallelSet, RadiusSample, Sampler};
use crate::surface::{fit_shells, validate_schedule, SurfaceEstimate};

/// Relative slack used when comparing the two sides of a closed-form inequality.
pub const CHAIN_REL_TOL: f64 = 1e-12;

/// `m_p` for real `p > −1`.
pub fn gaussian_moment(p: f64) -> Result<f64> {
    if !(p > -1.0) || !p.is_finite() {
        return Err(invalid(format!("moment order must be finite and > -1, got {p}")));
    }
    if p.fract() == 0.0 && p <= 170.0 {
        return Ok(integer_moment(p as u32));
    }
    Ok(ln_moment(p).exp())
}

/// `m_{2k+1} = 2^k k!` and `m_{2k} = (2k−1)!! √(π/2)`, by repeated products.
fn integer_moment(p: u32) -> f64 {
    if p % 2 == 1 {
        (1..=(p - 1) / 2).map(|j| 2.0 * f64::from(j)).product()
    } else {
        (1..p).step_by(2).map(f64::from).product::<f64>() * (PI / 2.0).sqrt()
    }
}

fn ln_moment(p: f64) -> f64 {
    0.5 * (p - 1.0) * std::f64::consts::LN_2 + ln_gamma(0.5 * (p + 1.0))
}

/// `m_0, ..., m_{p_max}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    values: Vec<f64>,
}

impl MomentTable {
    pub fn new(p_max: usize) -> Self {
        let values = (0..=p_max)
            .map(|p| gaussian_moment(p as f64).expect("integer orders are valid"))
            .collect();
        MomentTable { values }
    }

    pub fn get(&self, p: usize) -> Option<f64> {
        self.values.get(p).copied()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaussianMethod {
    DirectMc,
    Radial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub method: GaussianMethod,
}

/// Standard normal density `φ(x)`.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Gaussian surface area of the centered sphere `ρS^{d−1}`:
/// `(2π)^{−d/2} e^{−ρ²/2} · d |B_2^d| ρ^{d−1}`.
pub fn gaussian_sphere_surface(d: usize, rho: f64) -> Result<f64> {
    let ln = -0.5 * d as f64 * (2.0 * PI).ln() - 0.5 * rho * rho
        + (d as f64).ln()
        + ball_volume(d, 1.0)?.ln()
        + (d as f64 - 1.0) * rho.ln();
    Ok(ln.exp())
}

/// Fraction of `n` standard normal samples that fall in the set.
pub fn gaussian_measure_mc<S: ParallelSet + ?Sized>(set: &S, n: usize, seed: u64) -> Result<GaussianEstimate> {
    if n == 0 {
        return Err(invalid("sample count must be at least 1"));
    }
    let r = set.radius();
    let inside = map_samples(&Sampler::StandardNormal { dim: set.dim() }, n, seed, |x| {
        set.inclusion_radius(x) <= r
    });
    let hits = inside.iter().filter(|&&b| b).count();
    let p = hits as f64 / n as f64;
    Ok(GaussianEstimate {
        value: p,
        std_error: (p * (1.0 - p) / n as f64).sqrt(),
        n_samples: n as u64,
        seed,
        method: GaussianMethod::DirectMc,
    })
}

/// Radius beyond which the radial integral is truncated: `√d + 10`.
pub fn radial_cutoff(d: usize) -> f64 {
    (d as f64).sqrt() + 10.0
}

/// `γ_d(S) = (2π)^{−d/2} ∫_0^∞ t e^{−t²/2} |S ∩ tB_2^d| dt` from the volume
/// profile `t ↦ |S ∩ tB_2^d|`.
///
/// The profile is checked on a grid for nonnegativity, monotonicity and the
/// ball bound before integrating on `[0, √d + 10]`.
pub fn gaussian_measure_radial<F: Fn(f64) -> f64>(profile: F, d: usize, opts: QuadOptions) -> Result<f64> {
    if d == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    let cutoff = radial_cutoff(d);
    let tail = gamma_ur(0.5 * d as f64, 0.5 * cutoff * cutoff);
    if !(tail < 1e-12) {
        return Err(invalid(format!("Gaussian mass beyond the cutoff is {tail:e}")));
    }

    const CHECK_POINTS: usize = 1024;
    let mut prev = 0.0;
    for k in 0..=CHECK_POINTS {
        let t = cutoff * k as f64 / CHECK_POINTS as f64;
        let v = profile(t);
        let cap = if t > 0.0 { ball_volume(d, t)? } else { 0.0 };
        let slack = 1e-9 * (1.0 + cap);
        if !v.is_finite() || v < -slack {
            return Err(invalid(format!("profile is negative or non-finite at t = {t}")));
        }
        if v > cap + slack {
            return Err(invalid(format!("profile exceeds |tB| at t = {t}")));
        }
        if v < prev - slack {
            return Err(invalid(format!("profile decreases at t = {t}")));
        }
        prev = v;
    }

    let log_norm = -0.5 * d as f64 * (2.0 * PI).ln();
    let integrand = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let v = profile(t);
        if v <= 0.0 {
            0.0
        } else {
            (log_norm + t.ln() - 0.5 * t * t + v.ln()).exp()
        }
    };
    Ok(integrate(integrand, 0.0, cutoff, opts)?.value)
}

/// Gaussian surface area `γ_d^+(∂(A + rρB))` by coupled finite differences of
/// `γ_d` over Euclidean shell widths `ε`, extrapolated as in
/// [`crate::surface::outer_content`]. Only Euclidean-ball bodies qualify.
pub fn gaussian_surface_fd<S: ParallelSet + ?Sized>(
    set: &S,
    schedule: &[f64],
    n: usize,
    seed: u64,
) -> Result<SurfaceEstimate> {
    validate_schedule(schedule)?;
    if n == 0 {
        return Err(invalid("sample count must be at least 1"));
    }
    let rho = set
        .euclidean_scale()
        .ok_or_else(|| invalid("Gaussian surface area needs a Euclidean ball body"))?;
    let gauge_schedule: Vec<f64> = schedule.iter().map(|e| e / rho).collect();
    let sample = RadiusSample::draw(set, &Sampler::StandardNormal { dim: set.dim() }, n, seed);
    let mut est = fit_shells(&sample, set.radius(), &gauge_schedule)?.estimate;
    est.eps_schedule = schedule.to_vec();
    for q in &mut est.raw_quotients {
        q.value /= rho;
        q.std_error /= rho;
    }
    est.extrapolated /= rho;
    est.extrapolated_error /= rho;
    est.limsup_surrogate /= rho;
    Ok(est)
}

/// `r_* = d^{−1/2} / (2√e)`.
pub fn r_star(d: usize) -> f64 {
    1.0 / ((d as f64).sqrt() * 2.0 * E.sqrt())
}

/// `18 d · max(√d, 1/r)`.
pub fn theorem_bound(d: usize, r: f64) -> f64 {
    18.0 * d as f64 * (d as f64).sqrt().max(1.0 / r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    BelowRStar,
    AboveRStar,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::BelowRStar => "below_r_star",
            Regime::AboveRStar => "above_r_star",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub d: usize,
    pub r: f64,
    /// `B(d, r)`.
    pub explicit_bound: f64,
    /// `B(d, min(r, r_*))`, the quantity the 18-constant bound controls.
    pub reduced_bound: f64,
    /// `18 d · max(√d, 1/r)`.
    pub theorem_bound: f64,
    pub jog_gaussian: f64,
    pub jog_lebesgue_factor: f64,
    pub r_star: f64,
    /// `Σ_i C(d,i) m_{i+1} (2r)^{d−i} / m_{d+1}`, so `B = (d/r) · sum_term`.
    pub sum_term: f64,
    pub regime: Regime,
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `Σ exp(l_i)` without overflow, returned as its logarithm.
fn log_sum_exp(logs: &[f64]) -> f64 {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + compensated_sum(logs.iter().map(|l| (l - max).exp())).ln()
}

fn ln_binomial(d: usize, i: usize) -> f64 {
    ln_gamma(d as f64 + 1.0) - ln_gamma(i as f64 + 1.0) - ln_gamma((d - i) as f64 + 1.0)
}

fn ln_factorial(k: usize) -> f64 {
    ln_gamma(k as f64 + 1.0)
}

/// `x ln x` with `0 ln 0 = 0`.
fn xlnx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

fn check_dr(d: usize, r: f64) -> Result<()> {
    if d == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(invalid(format!("radius must be positive and finite, got {r}")));
    }
    Ok(())
}

/// `ln S(d, r)` with `S = Σ_i C(d,i) m_{i+1} (2r)^{d−i} / m_{d+1}`.
fn ln_sum_term(d: usize, r: f64) -> f64 {
    let ln_top = ln_moment(d as f64 + 1.0);
    let ln2r = (2.0 * r).ln();
    let logs: Vec<f64> = (0..=d)
        .map(|i| ln_binomial(d, i) + ln_moment(i as f64 + 1.0) + (d - i) as f64 * ln2r - ln_top)
        .collect();
    log_sum_exp(&logs)
}

fn ln_explicit(d: usize, r: f64) -> f64 {
    (d as f64 / r).ln() + ln_sum_term(d, r)
}

/// Evaluates `B(d, r)` and the comparison constants.
pub fn explicit_bound(d: usize, r: f64) -> Result<BoundReport> {
    check_dr(d, r)?;
    let rs = r_star(d);
    let sum_term = ln_sum_term(d, r).exp();
    let explicit = ln_explicit(d, r).exp();
    let reduced = ln_explicit(d, r.min(rs)).exp();
    if !explicit.is_finite() || !reduced.is_finite() {
        return Err(invalid(format!("B({d}, {r}) overflows f64")));
    }
    let jog = jog_bounds(d, r)?;
    Ok(BoundReport {
        d,
        r,
        explicit_bound: explicit,
        reduced_bound: reduced,
        theorem_bound: theorem_bound(d, r),
        jog_gaussian: jog.gaussian_bound,
        jog_lebesgue_factor: jog.lebesgue_factor,
        r_star: rs,
        sum_term,
        regime: if r <= rs { Regime::BelowRStar } else { Regime::AboveRStar },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JogBounds {
    /// `d · 2^{2d−1}`, the earlier constant in `|∂A_r| <= c |A_r| / r`.
    pub lebesgue_factor: f64,
    /// `2^{2d−1} d² 3^d max(1, 1/r)`.
    pub gaussian_bound: f64,
}

pub fn jog_bounds(d: usize, r: f64) -> Result<JogBounds> {
    check_dr(d, r)?;
    let df = d as f64;
    let pow2 = 2f64.powi(2 * d as i32 - 1);
    Ok(JogBounds {
        lebesgue_factor: df * pow2,
        gaussian_bound: pow2 * df * df * 3f64.powi(d as i32) * (1.0f64).max(1.0 / r),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StirlingBracket {
    pub lower: f64,
    pub gamma: f64,
    pub upper: f64,
}

impl StirlingBracket {
    pub fn holds(&self) -> bool {
        self.lower <= self.gamma && self.gamma <= self.upper
    }
}

/// `√(2πx) x^x e^{−x} <= Γ(x+1) <= 2√(2πx) x^x e^{−x}` for `x ∈ [1, ∞) ∪ {1/2}`.
pub fn stirling_gamma_bounds(x: f64) -> Result<StirlingBracket> {
    if !(x == 0.5 || (x >= 1.0 && x.is_finite())) {
        return Err(invalid(format!("Stirling bracket is stated for x in [1, inf) or x = 1/2, got {x}")));
    }
    let lower = ((2.0 * PI * x).sqrt().ln() + x * x.ln() - x).exp();
    Ok(StirlingBracket { lower, gamma: gamma(x + 1.0), upper: 2.0 * lower })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl ChainStep {
    fn new(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let holds = lhs <= rhs * (1.0 + CHAIN_REL_TOL);
        ChainStep { name: name.into(), lhs, rhs, holds }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub d: usize,
    pub r: f64,
    pub r_star: f64,
    pub steps: Vec<ChainStep>,
    pub all_hold: bool,
}

impl ChainReport {
    pub fn step(&self, name: &str) -> Option<&ChainStep> {
        self.steps.iter().find(|s| s.name == name)
    }
}

/// Evaluates both sides of every inequality leading from `B(d, r)` to
/// `2e·d/r` for `r <= r_*`:
///
/// - `binomial[i]`: `C(d,i) <= d^{d−i} / (d−i)!` for each `i`
/// - `stirling_sum`: `S(d,r) <= T1 := 2 Σ d^{d−i}/(d−i)! · i^{i/2}/d^{d/2} · (2√e r)^{d−i}`
/// - `sum_bound`: `T1 <= 2e`
/// - `threshold`: `T1 <= T2 := 2 Σ (i/d)^{i/2} / (d−i)!`
/// - `drop_ratio`: `T2 <= 2 Σ 1/(d−i)!`
/// - `exp_series`: `Σ 1/(d−i)! <= e`
/// - `final`: `B(d, r) <= 2e·d/r`
pub fn bound_chain_check(d: usize, r: f64) -> Result<ChainReport> {
    check_dr(d, r)?;
    let rs = r_star(d);
    if r > rs * (1.0 + CHAIN_REL_TOL) {
        return Err(invalid(format!("r = {r} exceeds r_* = {rs}")));
    }
    let df = d as f64;
    let mut steps = Vec::with_capacity(d + 8);

    for i in 0..=d {
        let lhs = ln_binomial(d, i).exp();
        let rhs = ((d - i) as f64 * df.ln() - ln_factorial(d - i)).exp();
        steps.push(ChainStep::new(format!("binomial[{i}]"), lhs, rhs));
    }

    let sum_term = ln_sum_term(d, r).exp();
    let ln_scale = (2.0 * E.sqrt() * r).ln();
    let t1_logs: Vec<f64> = (0..=d)
        .map(|i| {
            let k = (d - i) as f64;
            k * df.ln() - ln_factorial(d - i) + 0.5 * xlnx(i as f64) - 0.5 * df * df.ln() + k * ln_scale
        })
        .collect();
    let t1 = 2.0 * log_sum_exp(&t1_logs).exp();
    let t2_logs: Vec<f64> = (0..=d)
        .map(|i| 0.5 * xlnx(i as f64) - 0.5 * i as f64 * df.ln() - ln_factorial(d - i))
        .collect();
    let t2 = 2.0 * log_sum_exp(&t2_logs).exp();
    let series = compensated_sum((0..=d).map(|i| (-ln_factorial(d - i)).exp()));

    steps.push(ChainStep::new("stirling_sum", sum_term, t1));
    steps.push(ChainStep::new("sum_bound", t1, 2.0 * E));
    steps.push(ChainStep::new("threshold", t1, t2));
    steps.push(ChainStep::new("drop_ratio", t2, 2.0 * series));
    steps.push(ChainStep::new("exp_series", series, E));
    steps.push(ChainStep::new("final", ln_explicit(d, r).exp(), 2.0 * E * df / r));

    let all_hold = steps.iter().all(|s| s.holds);
    Ok(ChainReport { d, r, r_star: rs, steps, all_hold })
}

/// One report per `(d, r)`, `d` outer, `r` inner in the given order.
pub fn bound_table(dims: &[usize], radii: &[f64]) -> Result<Vec<BoundReport>> {
    if dims.is_empty() || radii.is_empty() {
        return Err(invalid("bound table needs at least one d and one r"));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("r grid must be strictly increasing"));
    }
    dims.iter()
        .flat_map(|&d| radii.iter().map(move |&r| explicit_bound(d, r)))
        .collect()
}

pub const BOUND_TABLE_HEADER: &str = "d,r,explicit_bound,theorem_bound,jog_gaussian,r_star,regime";

/// Writes the table as CSV with 17 significant digits per real.
pub fn write_bound_table_csv<W: Write>(rows: &[BoundReport], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{BOUND_TABLE_HEADER}")?;
    for row in rows {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            row.d,
            row.r,
            row.explicit_bound,
            row.theorem_bound,
            row.jog_gaussian,
            row.r_star,
            row.regime.as_str()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::{ConvexBody, ParallelHalfspace, Point, PointCloud, Scene};
    use approx::assert_relative_eq;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    /// `m_p` by quadrature of the defining integral.
    fn moment_by_quadrature(p: f64) -> f64 {
        integrate(|t: f64| if t == 0.0 { 0.0 } else { (-0.5 * t * t).exp() * t.powf(p) }, 0.0, 60.0, QuadOptions::default())
            .unwrap()
            .value
    }

    #[test]
    fn moment_examples() {
        assert_eq!(gaussian_moment(1.0).unwrap(), 1.0);
        assert_relative_eq!(gaussian_moment(0.0).unwrap(), (PI / 2.0).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(moment_by_quadrature(0.0), 1.25331, epsilon = 1e-5);
        assert!(gaussian_moment(-1.0).is_err());
        assert!(gaussian_moment(f64::NAN).is_err());
        let table = MomentTable::new(10);
        assert_eq!(table.get(1), Some(1.0));
        assert_eq!(table.values().len(), 11);
    }

    #[test]
    fn moments_match_quadrature() {
        for k in 0..=40 {
            let p = 0.5 * k as f64;
            assert_relative_eq!(gaussian_moment(p).unwrap(), moment_by_quadrature(p), max_relative = 1e-8);
        }
    }

    #[test]
    fn moment_ball_identity() {
        for d in 1..=40 {
            let lhs = gaussian_moment(d as f64 + 1.0).unwrap() * ball_volume(d, 1.0).unwrap();
            assert_relative_eq!(lhs, (2.0 * PI).powf(d as f64 / 2.0), max_relative = 1e-10);
        }
    }

    /// `m_p` for integer `p` from double factorials.
    fn moment_exact(p: u32) -> f64 {
        // m_{2k+1} = 2^k k!, m_{2k} = (2k−1)!! √(π/2)
        if p % 2 == 1 {
            let k = (p - 1) / 2;
            2f64.powi(k as i32) * (1..=k).map(f64::from).product::<f64>()
        } else {
            (1..p).step_by(2).map(f64::from).product::<f64>() * (PI / 2.0).sqrt()
        }
    }

    fn binomial_exact(d: u32, i: u32) -> f64 {
        let mut c: u128 = 1;
        for k in 0..i {
            c = c * u128::from(d - k) / u128::from(k + 1);
        }
        c as f64
    }

    /// `B(d, r)` by direct summation with exact integer binomials.
    fn explicit_direct(d: u32, r: f64) -> f64 {
        let s: f64 = (0..=d)
            .map(|i| binomial_exact(d, i) * moment_exact(i + 1) * (2.0 * r).powi((d - i) as i32))
            .sum();
        d as f64 / r * s / moment_exact(d + 1)
    }

    /// `B(d, r)` from the integral `(d/r) (1/m_{d+1}) ∫ t e^{−t²/2} (t + 2r)^d dt`.
    fn explicit_quadrature(d: u32, r: f64) -> f64 {
        let i = integrate(
            |t: f64| t * (-0.5 * t * t).exp() * (t + 2.0 * r).powi(d as i32),
            0.0,
            60.0,
            QuadOptions::default(),
        )
        .unwrap()
        .value;
        d as f64 / r * i / moment_exact(d + 1)
    }

    #[test]
    fn explicit_bound_d1_r1() {
        let b = explicit_bound(1, 1.0).unwrap();
        let m2 = (PI / 2.0).sqrt();
        assert_relative_eq!(b.explicit_bound, (2.0 + m2) / m2, max_relative = 1e-13);
        assert_relative_eq!(b.explicit_bound, 2.5958, epsilon = 1e-4);
        assert_eq!(b.theorem_bound, 18.0);
        assert_eq!(b.regime, Regime::AboveRStar);
    }

    #[test]
    fn explicit_bound_matches_independent_routes() {
        for d in 1..=20u32 {
            for r in [0.01, 0.1, 0.37, 1.0, 3.0] {
                let b = explicit_bound(d as usize, r).unwrap().explicit_bound;
                assert_relative_eq!(b, explicit_direct(d, r), max_relative = 1e-11);
                assert_relative_eq!(b, explicit_quadrature(d, r), max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn explicit_bound_is_finite_at_large_d() {
        for d in [100, 200] {
            let b = explicit_bound(d, 1e-3).unwrap();
            assert!(b.explicit_bound.is_finite() && b.explicit_bound > 0.0);
            assert!(b.reduced_bound <= b.theorem_bound);
        }
    }

    #[test]
    fn two_e_bound_below_r_star() {
        for d in [1, 2, 5, 30] {
            for f in [1.0, 0.5, 0.01] {
                let r = f * r_star(d);
                let b = explicit_bound(d, r).unwrap();
                assert!(b.explicit_bound <= 2.0 * E * d as f64 / r);
                assert_eq!(b.regime, Regime::BelowRStar);
            }
        }
    }

    #[test]
    fn jog_examples() {
        let j = jog_bounds(2, 1.0).unwrap();
        assert_relative_eq!(j.lebesgue_factor, 16.0, max_relative = 1e-14);
        assert_relative_eq!(j.gaussian_bound, 288.0, max_relative = 1e-14);
        assert_relative_eq!(theorem_bound(2, 1.0), 18.0 * 2.0 * 2f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(theorem_bound(2, 1.0), 50.91, epsilon = 1e-2);
        assert_relative_eq!(jog_bounds(1, 1.0).unwrap().lebesgue_factor, 2.0, max_relative = 1e-14);
        assert_relative_eq!(jog_bounds(3, 0.5).unwrap().gaussian_bound, 15552.0, max_relative = 1e-14);
    }

    #[test]
    fn stirling_examples() {
        let b = stirling_gamma_bounds(1.0).unwrap();
        assert_relative_eq!(b.lower, (2.0 * PI).sqrt() / E, max_relative = 1e-14);
        assert_relative_eq!(b.gamma, 1.0, max_relative = 1e-14);
        assert_relative_eq!(b.upper, 1.8443, epsilon = 1e-4);
        let h = stirling_gamma_bounds(0.5).unwrap();
        assert_relative_eq!(h.lower, 0.7602, epsilon = 1e-4);
        assert_relative_eq!(h.gamma, PI.sqrt() / 2.0, max_relative = 1e-14);
        assert_relative_eq!(h.upper, 1.5203, epsilon = 1e-4);
        let t = stirling_gamma_bounds(10.0).unwrap();
        assert!(t.holds() && (1.0..=2.0).contains(&(t.gamma / t.lower)));
        assert!(stirling_gamma_bounds(0.7).is_err());
        assert!(stirling_gamma_bounds(0.0).is_err());
    }

    #[test]
    fn chain_examples() {
        let c = bound_chain_check(4, r_star(4)).unwrap();
        assert_relative_eq!(c.r_star, 1.0 / (4.0 * E.sqrt()), max_relative = 1e-15);
        assert_relative_eq!(c.r_star, 0.15163, epsilon = 1e-5);
        assert!(c.all_hold, "{c:#?}");
        let c = bound_chain_check(1, 0.1).unwrap();
        assert!(c.step("sum_bound").unwrap().holds);
        let top = c.step("binomial[1]").unwrap();
        assert_relative_eq!(top.lhs, 1.0, max_relative = 1e-14);
        assert_relative_eq!(top.rhs, 1.0, max_relative = 1e-14);
        assert!(bound_chain_check(4, 1.0).is_err());
    }

    #[test]
    fn bound_table_csv() {
        let rows = bound_table(&[1, 2], &[0.5, 1.0]).unwrap();
        let mut buf = Vec::new();
        write_bound_table_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], BOUND_TABLE_HEADER);
        assert_eq!(lines.len(), 5);
        let row: Vec<&str> = lines[2].split(',').collect();
        assert_eq!(row[0], "1");
        assert_relative_eq!(row[2].parse::<f64>().unwrap(), rows[1].explicit_bound, max_relative = 1e-16);
        assert!(bound_table(&[], &[1.0]).is_err());
        assert!(bound_table(&[1], &[1.0, 0.5]).is_err());
    }

    #[test]
    fn radial_matches_chi_square_cdf() {
        for d in 1..=10usize {
            let chi = ChiSquared::new(d as f64).unwrap();
            for rho in [0.3, 1.0, 2.5, (d as f64).sqrt() + 5.0] {
                let g = gaussian_measure_radial(|t| ball_volume(d, t.min(rho).max(1e-300)).unwrap(), d, QuadOptions::default()).unwrap();
                assert!((g - chi.cdf(rho * rho)).abs() <= 1e-6, "d={d} rho={rho}: {g}");
            }
        }
    }

    #[test]
    fn radial_examples_and_rejections() {
        let disk = gaussian_measure_radial(|t| ball_volume(2, t.clamp(1e-300, 1.0)).unwrap(), 2, QuadOptions::default()).unwrap();
        assert_relative_eq!(disk, 1.0 - (-0.5f64).exp(), epsilon = 1e-10);
        let whole = gaussian_measure_radial(|t| if t > 0.0 { ball_volume(3, t).unwrap() } else { 0.0 }, 3, QuadOptions::default()).unwrap();
        assert_relative_eq!(whole, 1.0, epsilon = 1e-10);
        assert_eq!(gaussian_measure_radial(|_| 0.0, 2, QuadOptions::default()).unwrap(), 0.0);
        let bump = |t: f64| if (1.0..2.0).contains(&t) { 1.0 } else { 0.0 };
        assert!(gaussian_measure_radial(bump, 2, QuadOptions::default()).is_err());
    }

    #[test]
    fn gaussian_measure_of_disk_and_halfspace() {
        let disk = Scene::new(PointCloud::singleton(Point::origin(2)), ConvexBody::unit_ball(), 1.0).unwrap();
        let g = gaussian_measure_mc(&disk, 400_000, 5).unwrap();
        assert!((g.value - (1.0 - (-0.5f64).exp())).abs() < 4.0 * g.std_error, "{g:?}");
        assert_relative_eq!(1.0 - (-0.5f64).exp(), 0.39347, epsilon = 1e-5);

        let half = ParallelHalfspace::from_closed(&[1.0, 0.0, 0.0], 0.0, 1.0).unwrap();
        let g = gaussian_measure_mc(&half, 400_000, 6).unwrap();
        assert!((g.value - 0.5).abs() < 4.0 * g.std_error, "{g:?}");

        let tiny = Scene::new(PointCloud::singleton(Point::origin(2)), ConvexBody::unit_ball(), 1e-4).unwrap();
        assert!(gaussian_measure_mc(&tiny, 100_000, 7).unwrap().value < 1e-5);
    }

    #[test]
    fn gaussian_surface_closed_forms() {
        assert_relative_eq!(gaussian_sphere_surface(2, 1.0).unwrap(), (-0.5f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(gaussian_sphere_surface(1, 1.0).unwrap(), 2.0 * std_normal_pdf(1.0), max_relative = 1e-14);
        assert_relative_eq!(2.0 * std_normal_pdf(1.0), 0.48394, epsilon = 1e-5);
        assert_relative_eq!(std_normal_pdf(0.0), 0.39894, epsilon = 1e-5);
    }

    #[test]
    fn gaussian_surface_fd_examples() {
        let sched = crate::surface::default_schedule(1.0);
        let disk = Scene::new(PointCloud::singleton(Point::origin(2)), ConvexBody::unit_ball(), 1.0).unwrap();
        let est = gaussian_surface_fd(&disk, &sched, 1_000_000, 17).unwrap();
        assert!((est.extrapolated - (-0.5f64).exp()).abs() < 4.0 * est.extrapolated_error, "{est:?}");

        let seg = Scene::new(PointCloud::singleton(Point::origin(1)), ConvexBody::unit_ball(), 1.0).unwrap();
        let est = gaussian_surface_fd(&seg, &sched, 1_000_000, 18).unwrap();
        assert!((est.extrapolated - 2.0 * std_normal_pdf(1.0)).abs() < 4.0 * est.extrapolated_error, "{est:?}");

        let half = ParallelHalfspace::from_closed(&[1.0, 0.0], 0.0, 1.0).unwrap();
        let est = gaussian_surface_fd(&half, &sched, 1_000_000, 19).unwrap();
        assert!((est.extrapolated - std_normal_pdf(0.0)).abs() < 4.0 * est.extrapolated_error, "{est:?}");
        assert!(gaussian_surface_fd(&half, &[0.1], 1000, 1).is_err());

        let cube = Scene::new(PointCloud::singleton(Point::origin(2)), ConvexBody::scaled_cube(&[1.0, 1.0]).unwrap(), 1.0).unwrap();
        assert!(gaussian_surface_fd(&cube, &sched, 1000, 1).is_err());
    }
}

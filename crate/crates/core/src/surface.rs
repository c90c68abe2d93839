//! Outer Minkowski content of parallel sets by coupled finite differences.
//!
//! For a ladder `ε_0 > ε_1 > ... > ε_{K-1}` the shell quotients
//! `q_k = (|A + (r+ε_k)K| − |A + rK|) / ε_k` are computed from one sample, so
//! they are nonnegative and nested exactly. The limit `ε → 0⁺` is estimated by
//! fitting `q(ε) = L + cε` through the ladder and reading off `L`. With two
//! levels this is plain Richardson extrapolation `2q(ε/2) − q(ε)`; with more
//! levels the fit is generalized least squares under the covariance that
//! nested shells of a locally uniform point density have,
//! `Cov(q_j, q_k) ∝ 1 / max(ε_j, ε_k)`. The weights depend on the ladder only.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bodies::Scene;
use crate::error::{invalid, Error, Result};
use crate::measure::{ball_volume, coupled_sample, exact_volume, VolumeEstimate};
use crate::sampling::RadiusSample;

pub const DEFAULT_LEVELS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quotient {
    pub value: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceEstimate {
    pub eps_schedule: Vec<f64>,
    pub raw_quotients: Vec<Quotient>,
    /// Intercept of the straight-line fit through the ladder.
    pub extrapolated: f64,
    pub extrapolated_error: f64,
    /// Max of the quotients at the two smallest `ε`.
    pub limsup_surrogate: f64,
    pub seed: u64,
    pub n_samples: u64,
}

/// `ε_k = eps0 · 2^{-k}` for `k < levels`.
pub fn geometric_schedule(eps0: f64, levels: usize) -> Result<Vec<f64>> {
    if !(eps0 > 0.0) || !eps0.is_finite() {
        return Err(invalid(format!("eps0 must be positive, got {eps0}")));
    }
    if levels < 2 {
        return Err(invalid("an extrapolation ladder needs at least 2 levels"));
    }
    Ok((0..levels).map(|k| eps0 * 0.5f64.powi(k as i32)).collect())
}

/// `ε_0 = r/10` with five levels.
pub fn default_schedule(r: f64) -> Vec<f64> {
    geometric_schedule(r / 10.0, DEFAULT_LEVELS).expect("r is positive")
}

pub(crate) fn validate_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.len() < 2 {
        return Err(invalid("an extrapolation ladder needs at least 2 levels"));
    }
    if schedule.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(invalid("every ε must be positive and finite"));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("ε schedule must be strictly decreasing"));
    }
    Ok(())
}

/// Weights `w` with `L = Σ w_k q_k` for the intercept of the ladder fit.
///
/// They satisfy `Σ w_k = 1` and `Σ w_k ε_k = 0`, so the fit reproduces any
/// quotient sequence that is exactly affine in `ε`.
pub fn extrapolation_weights(schedule: &[f64]) -> Result<Vec<f64>> {
    validate_schedule(schedule)?;
    let k = schedule.len();
    let cov = DMatrix::from_fn(k, k, |i, j| 1.0 / schedule[i].max(schedule[j]));
    let design = DMatrix::from_fn(k, 2, |i, j| if j == 0 { 1.0 } else { schedule[i] });
    let chol = cov
        .cholesky()
        .ok_or_else(|| invalid("ladder covariance is not positive definite"))?;
    let cinv_x = chol.solve(&design);
    let normal = design.transpose() * &cinv_x;
    let normal_inv = normal
        .try_inverse()
        .ok_or_else(|| invalid("ladder is degenerate"))?;
    // first row of (X' C^-1 X)^-1 X' C^-1
    let w = cinv_x * normal_inv.column(0);
    Ok(w.iter().copied().collect())
}

/// Intercept of the ladder fit for noise-free quotient values.
pub fn extrapolate(schedule: &[f64], values: &[f64]) -> Result<f64> {
    if schedule.len() != values.len() {
        return Err(invalid("one value per ε is required"));
    }
    let w = DVector::from_vec(extrapolation_weights(schedule)?);
    Ok(w.dot(&DVector::from_column_slice(values)))
}

/// Shell fit plus `E[g²]` of the per-sample influence `g` with `L = E[g]`.
pub(crate) struct ShellFit {
    pub estimate: SurfaceEstimate,
    pub second_moment: f64,
}

pub(crate) fn fit_shells(sample: &RadiusSample, r: f64, schedule: &[f64]) -> Result<ShellFit> {
    let weights = extrapolation_weights(schedule)?;
    let n = sample.n() as f64;
    let big_w = sample.weight();
    let counts: Vec<u64> = schedule.iter().map(|&e| sample.hits_between(r, r + e)).collect();

    let raw_quotients: Vec<Quotient> = counts
        .iter()
        .zip(schedule)
        .map(|(&c, &e)| {
            let p = c as f64 / n;
            Quotient {
                value: big_w * p / e,
                std_error: big_w / e * (p * (1.0 - p) / n).sqrt(),
            }
        })
        .collect();

    // The intercept is a sample mean of g(ρ), constant on each annulus
    // (r + ε_{j+1}, r + ε_j]: g_j = W Σ_{k<=j} w_k / ε_k.
    let mut mean = 0.0;
    let mut second = 0.0;
    let mut g = 0.0;
    for j in 0..schedule.len() {
        g += big_w * weights[j] / schedule[j];
        let inner = counts.get(j + 1).copied().unwrap_or(0);
        let prob = (counts[j] - inner) as f64 / n;
        mean += g * prob;
        second += g * g * prob;
    }
    let var = (second - mean * mean).max(0.0);
    let k = schedule.len();
    let limsup_surrogate = raw_quotients[k - 1].value.max(raw_quotients[k - 2].value);
    Ok(ShellFit {
        estimate: SurfaceEstimate {
            eps_schedule: schedule.to_vec(),
            raw_quotients,
            extrapolated: mean,
            extrapolated_error: (var / n).sqrt(),
            limsup_surrogate,
            seed: sample.seed(),
            n_samples: sample.n() as u64,
        },
        second_moment: second,
    })
}

/// `(|A + (r+ε)K| − |A + rK|) / ε` with its standard error.
pub fn shell_quotient(scene: &Scene, eps: f64, n: usize, seed: u64) -> Result<Quotient> {
    shell_quotient_with_margin(scene, eps, eps, n, seed)
}

/// As [`shell_quotient`], sampling the box of `A + (r + margin)K`. Fails when
/// the shell would leave that box.
pub fn shell_quotient_with_margin(
    scene: &Scene,
    eps: f64,
    margin: f64,
    n: usize,
    seed: u64,
) -> Result<Quotient> {
    if !(eps > 0.0) {
        return Err(invalid(format!("ε must be positive, got {eps}")));
    }
    if eps > margin {
        return Err(invalid(format!("ε = {eps} exceeds the sampling margin {margin}")));
    }
    let sample = coupled_sample(scene, scene.r() + margin, n, seed)?;
    let c = sample.hits_between(scene.r(), scene.r() + eps);
    let p = c as f64 / n as f64;
    Ok(Quotient {
        value: sample.weight() * p / eps,
        std_error: sample.weight() / eps * (p * (1.0 - p) / n as f64).sqrt(),
    })
}

/// Outer Minkowski content of `A + rK` relative to `K`.
pub fn outer_content(scene: &Scene, schedule: &[f64], n: usize, seed: u64) -> Result<SurfaceEstimate> {
    validate_schedule(schedule)?;
    let sample = coupled_sample(scene, scene.r() + schedule[0], n, seed)?;
    Ok(fit_shells(&sample, scene.r(), schedule)?.estimate)
}

/// Same ladder evaluated on closed-form volumes; errors are zero.
pub fn outer_content_exact(scene: &Scene, schedule: &[f64]) -> Result<SurfaceEstimate> {
    validate_schedule(schedule)?;
    let base = exact_volume(scene).ok_or_else(|| invalid("scene has no closed-form volume"))?;
    let values = schedule
        .iter()
        .map(|&e| {
            let v = exact_volume(&scene.with_radius(scene.r() + e)?)
                .ok_or_else(|| invalid("scene has no closed-form volume"))?;
            Ok((v - base) / e)
        })
        .collect::<Result<Vec<f64>>>()?;
    let k = values.len();
    Ok(SurfaceEstimate {
        eps_schedule: schedule.to_vec(),
        raw_quotients: values.iter().map(|&value| Quotient { value, std_error: 0.0 }).collect(),
        extrapolated: extrapolate(schedule, &values)?,
        extrapolated_error: 0.0,
        limsup_surrogate: values[k - 1].max(values[k - 2]),
        seed: 0,
        n_samples: 0,
    })
}

/// Surface area of the sphere of radius `rho` in `R^d`: `d |B_2^d| ρ^{d−1}`.
pub fn sphere_surface(d: usize, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(invalid(format!("radius must be positive, got {rho}")));
    }
    Ok(d as f64 * ball_volume(d, 1.0)? * rho.powi(d as i32 - 1))
}

/// Surface-to-volume ratio of a parallel set with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub ratio: f64,
    pub ci: f64,
    pub surface: SurfaceEstimate,
    pub volume: VolumeEstimate,
}

/// `|∂_K (A + rK)|_+ / |A + rK|`, both from one coupled sample.
///
/// The error is the delta-method standard error of the ratio of two sample
/// means; shell and volume indicators have disjoint support, which removes
/// the cross term.
pub fn ratio_thm1(scene: &Scene, n: usize, seed: u64, schedule: &[f64]) -> Result<RatioEstimate> {
    validate_schedule(schedule)?;
    let r = scene.r();
    let sample = coupled_sample(scene, r + schedule[0], n, seed)?;
    let fit = fit_shells(&sample, r, schedule)?;
    let hits = sample.hits(r);
    let volume = VolumeEstimate::from_hits(hits, n as u64, sample.weight(), seed);
    if hits == 0 || volume.value <= 3.0 * volume.std_error {
        return Err(Error::IllConditioned(format!(
            "volume {} is within 3 standard errors of zero",
            volume.value
        )));
    }
    let ratio = fit.estimate.extrapolated / volume.value;
    // Var(g − R h) with E[h²] = W·V
    let var = fit.second_moment + ratio * ratio * sample.weight() * volume.value;
    let ci = (var / n as f64).sqrt() / volume.value;
    Ok(RatioEstimate { ratio, ci, surface: fit.estimate, volume })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::{ConvexBody, Point, PointCloud};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn ball_scene(points: Vec<Vec<f64>>, r: f64) -> Scene {
        Scene::new(PointCloud::from_coords(points).unwrap(), ConvexBody::unit_ball(), r).unwrap()
    }

    #[test]
    fn weights_reproduce_affine_sequences() {
        for levels in 2..8 {
            let s = geometric_schedule(0.1, levels).unwrap();
            let w = extrapolation_weights(&s).unwrap();
            assert_relative_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            assert!(w.iter().zip(&s).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-12);
        }
        // two levels: Richardson 2 q(ε/2) − q(ε)
        let w = extrapolation_weights(&[0.2, 0.1]).unwrap();
        assert_relative_eq!(w[0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(w[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn schedule_validation() {
        assert!(geometric_schedule(0.1, 1).is_err());
        assert!(validate_schedule(&[0.1, 0.1]).is_err());
        assert!(validate_schedule(&[0.1, 0.2]).is_err());
        assert!(validate_schedule(&[0.1, 0.0]).is_err());
        assert_eq!(default_schedule(1.0), vec![0.1, 0.05, 0.025, 0.0125, 0.00625]);
    }

    #[test]
    fn sphere_surface_examples() {
        assert_relative_eq!(sphere_surface(2, 1.0).unwrap(), 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(sphere_surface(3, 2.0).unwrap(), 16.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(sphere_surface(1, 7.0).unwrap(), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn interval_shell_is_two() {
        let s = ball_scene(vec![vec![0.0]], 1.0);
        for eps in [0.3, 0.01] {
            let q = shell_quotient(&s, eps, 200_000, 4).unwrap();
            assert!((q.value - 2.0).abs() < 4.0 * q.std_error, "{q:?}");
        }
        let exact = outer_content_exact(&s, &default_schedule(1.0)).unwrap();
        assert!(exact.raw_quotients.iter().all(|q| (q.value - 2.0).abs() < 1e-12));
        assert_relative_eq!(exact.extrapolated, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn annulus_quotient() {
        // (π(1+ε)² − π)/ε = π(2 + ε)
        let s = ball_scene(vec![vec![0.0, 0.0]], 1.0);
        let q = shell_quotient(&s, 0.01, 1_000_000, 8).unwrap();
        assert!((q.value - PI * 2.01).abs() < 4.0 * q.std_error, "{q:?}");
        assert_relative_eq!(PI * 2.01, 6.3146, epsilon = 1e-4);
    }

    #[test]
    fn shell_quotient_rejects_bad_eps() {
        let s = ball_scene(vec![vec![0.0, 0.0]], 1.0);
        assert!(shell_quotient(&s, 0.0, 100, 1).is_err());
        assert!(shell_quotient_with_margin(&s, 0.2, 0.1, 100, 1).is_err());
    }

    #[test]
    fn outer_content_of_disk_and_two_disks() {
        let one = ball_scene(vec![vec![0.0, 0.0]], 1.0);
        let est = outer_content(&one, &default_schedule(1.0), 1_000_000, 12).unwrap();
        assert!((est.extrapolated - 2.0 * PI).abs() < 4.0 * est.extrapolated_error, "{est:?}");
        assert!(est.raw_quotients.iter().all(|q| q.value >= 0.0));
        assert_eq!(est.eps_schedule.len(), 5);

        let two = ball_scene(vec![vec![0.0, 0.0], vec![3.0, 0.0]], 1.0);
        let est = outer_content(&two, &default_schedule(1.0), 1_000_000, 13).unwrap();
        assert!((est.extrapolated - 4.0 * PI).abs() < 4.0 * est.extrapolated_error, "{est:?}");
    }

    #[test]
    fn outer_content_rejects_short_ladder() {
        let s = ball_scene(vec![vec![0.0, 0.0]], 1.0);
        assert!(outer_content(&s, &[0.1], 1000, 1).is_err());
    }

    #[test]
    fn ratio_examples() {
        let s = ball_scene(vec![vec![0.0, 0.0, 0.0]], 0.5);
        let est = ratio_thm1(&s, 1_000_000, 3, &default_schedule(0.5)).unwrap();
        assert!((est.ratio - 6.0).abs() < 4.0 * est.ci, "{est:?}");
        let s = ball_scene(vec![vec![0.0, 0.0]], 2.0);
        let est = ratio_thm1(&s, 1_000_000, 3, &default_schedule(2.0)).unwrap();
        assert!((est.ratio - 1.0).abs() < 4.0 * est.ci, "{est:?}");
        let s = ball_scene(vec![vec![0.0, 0.0], vec![0.1, 0.0]], 1.0);
        let est = ratio_thm1(&s, 1_000_000, 3, &default_schedule(1.0)).unwrap();
        assert!(est.ratio <= 2.0 + 3.0 * est.ci, "{est:?}");
    }

    #[test]
    fn ratio_error_matches_seed_to_seed_spread() {
        let s = Scene::new(
            PointCloud::singleton(Point::origin(2)),
            ConvexBody::cross_polytope(2).unwrap(),
            1.0,
        )
        .unwrap();
        let sched = default_schedule(1.0);
        let runs: Vec<RatioEstimate> =
            (0..40).map(|seed| ratio_thm1(&s, 50_000, seed, &sched).unwrap()).collect();
        let mean = runs.iter().map(|e| e.ratio).sum::<f64>() / 40.0;
        let sd = (runs.iter().map(|e| (e.ratio - mean).powi(2)).sum::<f64>() / 39.0).sqrt();
        let ci = runs.iter().map(|e| e.ci).sum::<f64>() / 40.0;
        assert!(sd / ci > 0.6 && sd / ci < 1.5, "sd {sd} vs ci {ci}");
        assert!((mean - 2.0).abs() < 4.0 * ci / 40f64.sqrt() + 0.01, "{mean}");
    }
}

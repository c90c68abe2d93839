//! Lebesgue volume of parallel sets.
//!
//! Closed forms cover a single ball, two balls and every one-dimensional
//! scene. Everything else goes through seeded Monte Carlo; estimates at
//! several radii always share one sample so that they are exactly nested.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use crate::bodies::{norm, PointCloud, Scene};
use crate::error::{check_dim, invalid, Result};
use crate::sampling::{RadiusSample, Sampler};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    MonteCarlo,
    Grid,
}

/// A volume with its standard error. For exact values `std_error == 0` and
/// `n_samples == 1`; for grid values `n_samples` is the cell count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub method: Method,
}

impl VolumeEstimate {
    pub fn exact(value: f64) -> Self {
        VolumeEstimate { value, std_error: 0.0, n_samples: 1, seed: 0, method: Method::Exact }
    }

    /// Binomial estimate `weight * hits / n`.
    pub(crate) fn from_hits(hits: u64, n: u64, weight: f64, seed: u64) -> Self {
        let p = hits as f64 / n as f64;
        VolumeEstimate {
            value: weight * p,
            std_error: weight * (p * (1.0 - p) / n as f64).sqrt(),
            n_samples: n,
            seed,
            method: Method::MonteCarlo,
        }
    }
}

/// `|ρ B_2^d| = π^{d/2} / Γ(d/2 + 1) · ρ^d`, evaluated in log space.
pub fn ball_volume(d: usize, rho: f64) -> Result<f64> {
    if d == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    if !(rho > 0.0) {
        return Err(invalid(format!("radius must be positive, got {rho}")));
    }
    let h = d as f64 / 2.0;
    Ok((h * std::f64::consts::PI.ln() - ln_gamma(h + 1.0) + d as f64 * rho.ln()).exp())
}

fn check_samples(n: usize) -> Result<()> {
    if n == 0 {
        return Err(invalid("sample count must be at least 1"));
    }
    Ok(())
}

/// Uniform sample over the box of `A + t_max K`.
pub fn coupled_sample(scene: &Scene, t_max: f64, n: usize, seed: u64) -> Result<RadiusSample> {
    check_samples(n)?;
    let bx = scene.bounding_box_for_radius(t_max);
    Ok(RadiusSample::draw(scene, &Sampler::Uniform(bx), n, seed))
}

/// Monte Carlo estimate of `|A + rK|`.
pub fn mc_volume(scene: &Scene, n: usize, seed: u64) -> Result<VolumeEstimate> {
    Ok(coupled_volumes(scene, &[scene.r()], n, seed)?[0])
}

/// `|A + tK|` for every `t` in `radii`, all from the same sample points.
///
/// The sampling box is the one for the largest radius. Because a point covered
/// at radius `t` is covered at every larger radius, the returned values are
/// nondecreasing exactly, not just in expectation.
pub fn coupled_volumes(
    scene: &Scene,
    radii: &[f64],
    n: usize,
    seed: u64,
) -> Result<Vec<VolumeEstimate>> {
    check_samples(n)?;
    let t_max = *radii.last().ok_or_else(|| invalid("radii list is empty"))?;
    if radii.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
        return Err(invalid("radii must be positive and finite"));
    }
    if radii.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("radii must be nondecreasing"));
    }
    let bx = scene.bounding_box_for_radius(t_max);
    if bx.volume() == 0.0 {
        return Ok(radii.iter().map(|_| VolumeEstimate::exact(0.0)).collect());
    }
    let sample = RadiusSample::draw(scene, &Sampler::Uniform(bx), n, seed);
    Ok(radii
        .iter()
        .map(|&t| VolumeEstimate::from_hits(sample.hits(t), n as u64, sample.weight(), seed))
        .collect())
}

/// Exact length of `∪ [a − r, a + r]` over a one-dimensional cloud.
pub fn interval_union_length(cloud: &PointCloud, r: f64) -> Result<f64> {
    interval_union_length_asym(cloud, r, r)
}

/// Length of `∪ [a − left, a + right]`.
fn interval_union_length_asym(cloud: &PointCloud, left: f64, right: f64) -> Result<f64> {
    check_dim(1, cloud.dim())?;
    if !(left >= 0.0 && right >= 0.0) {
        return Err(invalid("interval half-widths must be nonnegative"));
    }
    let mut centers: Vec<f64> = cloud.points().iter().map(|p| p[0]).collect();
    centers.sort_by(f64::total_cmp);
    let mut total = 0.0;
    let mut current: Option<(f64, f64)> = None;
    for c in centers {
        let (lo, hi) = (c - left, c + right);
        current = match current {
            Some((s, e)) if lo <= e => Some((s, e.max(hi))),
            Some((s, e)) => {
                total += e - s;
                Some((lo, hi))
            }
            None => Some((lo, hi)),
        };
    }
    if let Some((s, e)) = current {
        total += e - s;
    }
    Ok(total)
}

/// Volume of the union of two balls of radius `rho` centered at `c1`, `c2`.
///
/// The overlap is two spherical caps of height `rho − δ/2`; each cap is
/// `½ |ρB| · I_{1 − (δ/2ρ)²}((d+1)/2, 1/2)`.
pub fn two_ball_union_volume(c1: &[f64], c2: &[f64], rho: f64, d: usize) -> Result<f64> {
    check_dim(d, c1.len())?;
    check_dim(d, c2.len())?;
    let v = ball_volume(d, rho)?;
    let diff: Vec<f64> = c1.iter().zip(c2).map(|(a, b)| a - b).collect();
    let delta = norm(&diff);
    if delta >= 2.0 * rho {
        return Ok(2.0 * v);
    }
    if delta == 0.0 {
        return Ok(v);
    }
    let half = delta / (2.0 * rho);
    let x = 1.0 - half * half;
    let cap = 0.5 * v * beta_reg((d as f64 + 1.0) / 2.0, 0.5, x);
    Ok(2.0 * v - 2.0 * cap)
}

/// Closed-form volume when one is available: every `d = 1` scene, and
/// Euclidean-ball scenes with one or two cloud points.
pub fn exact_volume(scene: &Scene) -> Option<f64> {
    let d = scene.dim();
    let r = scene.r();
    let pts = scene.cloud().points();
    if d == 1 {
        let left = r * scene.body().support(&[-1.0]).ok()?;
        let right = r * scene.body().support(&[1.0]).ok()?;
        return interval_union_length_asym(scene.cloud(), left, right).ok();
    }
    let crate::bodies::ConvexBody::Ball(b) = scene.body() else {
        return None;
    };
    let rho = r * b.radius();
    match pts {
        [_] => ball_volume(d, rho).ok(),
        [a, c] => two_ball_union_volume(a, c, rho, d).ok(),
        _ => None,
    }
}

/// Deterministic midpoint-grid volume, `d <= 3`, cross-check only.
///
/// The reported `std_error` is a discretization indicator: the volume of cells
/// whose center and corners disagree on membership.
pub fn grid_volume(scene: &Scene, h: f64) -> Result<VolumeEstimate> {
    let d = scene.dim();
    if d > 3 {
        return Err(invalid("grid volume supports d <= 3"));
    }
    if !(h > 0.0) {
        return Err(invalid("grid spacing must be positive"));
    }
    let bx = scene.bounding_box();
    let counts: Vec<usize> = bx
        .lo()
        .iter()
        .zip(bx.hi())
        .map(|(l, u)| (((u - l) / h).ceil() as usize).max(1))
        .collect();
    let total: usize = counts.iter().product();
    if total > 50_000_000 {
        return Err(invalid(format!("grid of {total} cells is too fine")));
    }
    let steps: Vec<f64> = (0..d).map(|i| (bx.hi()[i] - bx.lo()[i]) / counts[i] as f64).collect();
    let cell_volume: f64 = steps.iter().product();
    let r = scene.r();

    // node grid has counts[i] + 1 points per axis
    let node_counts: Vec<usize> = counts.iter().map(|c| c + 1).collect();
    let n_nodes: usize = node_counts.iter().product();
    let node_inside: Vec<bool> = (0..n_nodes)
        .into_par_iter()
        .map(|idx| {
            let mut x = vec![0.0; d];
            let mut rem = idx;
            for i in 0..d {
                x[i] = bx.lo()[i] + (rem % node_counts[i]) as f64 * steps[i];
                rem /= node_counts[i];
            }
            scene.inclusion_radius_unchecked(&x) <= r
        })
        .collect();

    let (inside, uncertain) = (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut cell = [0usize; 3];
            let mut x = vec![0.0; d];
            let mut rem = idx;
            for i in 0..d {
                cell[i] = rem % counts[i];
                rem /= counts[i];
                x[i] = bx.lo()[i] + (cell[i] as f64 + 0.5) * steps[i];
            }
            let center = scene.inclusion_radius_unchecked(&x) <= r;
            let mixed = (0..1usize << d).any(|corner| {
                let mut node = 0;
                let mut stride = 1;
                for i in 0..d {
                    node += (cell[i] + (corner >> i & 1)) * stride;
                    stride *= node_counts[i];
                }
                node_inside[node] != center
            });
            (center as u64, mixed as u64)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));

    Ok(VolumeEstimate {
        value: inside as f64 * cell_volume,
        std_error: (uncertain.max(1)) as f64 * cell_volume,
        n_samples: total as u64,
        seed: 0,
        method: Method::Grid,
    })
}

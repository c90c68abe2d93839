use serde::{Deserialize, Serialize};

use crate::bodies::{BoundingBox, ConvexBody, PointCloud, Scene};
use crate::error::{invalid, Result};
use crate::measure::two_ball_union_volume;
use crate::sampling::{map_samples, Sampler};
use crate::verify::BodyKind;

/// Slack for comparisons between closed-form volumes.
pub const ORACLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `t ↦ |sA + tK|` at fixed `s`.
    T,
    /// `s ↦ |sA + tK|` at fixed `t`.
    S,
    /// `t ↦ |sA + tK| / t^d` at fixed `s`, expected nonincreasing.
    Ratio,
}

/// One adjacent-pair comparison that went the wrong way.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub direction: Direction,
    pub s_index: usize,
    pub t_index: usize,
    /// Signed decrease (or increase for `Ratio`) in volume units.
    pub amount: f64,
    /// `amount` divided by the standard error of the difference; absent for
    /// exact comparisons.
    pub sigmas: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub s_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    /// `volumes[i][j] ≈ |s_i A + t_j K|`.
    pub volumes: Vec<Vec<f64>>,
    pub std_errors: Vec<Vec<f64>>,
    pub n_samples: u64,
    pub seed: u64,
    pub tolerance_sigmas: f64,
    /// Must be empty: under coupling the `t` direction is monotone pointwise.
    pub exact_violations: Vec<Violation>,
    /// Comparisons in `s` and in the ratio exceeding `tolerance_sigmas`.
    pub statistical_excursions: Vec<Violation>,
    pub statistical_comparisons: usize,
}

impl MonotonicityReport {
    pub fn pass(&self) -> bool {
        self.exact_violations.is_empty()
    }
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid(format!("{name} is empty")));
    }
    if grid.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(invalid(format!("{name} must be positive and finite")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid(format!("{name} must be strictly increasing")));
    }
    Ok(())
}

fn union_box(scenes: &[Scene], t: f64) -> Result<BoundingBox> {
    let d = scenes[0].dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for s in scenes {
        let b = s.bounding_box_for_radius(t);
        for i in 0..d {
            lo[i] = lo[i].min(b.lo()[i]);
            hi[i] = hi[i].max(b.hi()[i]);
        }
    }
    BoundingBox::new(lo, hi)
}

/// Checks that `|sA + tK|` is nondecreasing in `s` and in `t`, and that
/// `|sA + tK| / t^d` is nonincreasing in `t`.
///
/// All `(s, t)` pairs share one uniform sample over a box containing every
/// set, so each sample point has a fixed inclusion radius per `s`. This makes
/// the `t` direction monotone pointwise; the other two comparisons are
/// judged against the standard error of the paired difference.
pub fn monotonicity_check(
    cloud: &PointCloud,
    body: &ConvexBody,
    s_grid: &[f64],
    t_grid: &[f64],
    n: usize,
    seed: u64,
    tolerance_sigmas: f64,
) -> Result<MonotonicityReport> {
    check_grid("s grid", s_grid)?;
    check_grid("t grid", t_grid)?;
    if n == 0 {
        return Err(invalid("sample count must be at least 1"));
    }
    let t_max = *t_grid.last().expect("nonempty");
    let scenes = s_grid
        .iter()
        .map(|&s| Scene::new(cloud.scaled(s), body.clone(), t_max))
        .collect::<Result<Vec<_>>>()?;
    let d = scenes[0].dim();
    let bx = union_box(&scenes, t_max)?;
    let w = bx.volume();
    let radii: Vec<Vec<f64>> = map_samples(&Sampler::Uniform(bx), n, seed, |x| {
        scenes.iter().map(|s| s.inclusion_radius_unchecked(x)).collect()
    });

    let ns = s_grid.len();
    let nt = t_grid.len();
    let nf = n as f64;
    // bucket[i][j]: points first covered at t_j for scale s_i (nt = never)
    let bucket = |rho: f64| t_grid.partition_point(|&t| t < rho);
    let mut first = vec![vec![0u64; nt + 1]; ns];
    for row in &radii {
        for (i, &rho) in row.iter().enumerate() {
            first[i][bucket(rho)] += 1;
        }
    }
    let counts: Vec<Vec<u64>> = first
        .iter()
        .map(|f| f[..nt].iter().scan(0u64, |acc, &c| { *acc += c; Some(*acc) }).collect())
        .collect();
    let volumes: Vec<Vec<f64>> = counts.iter().map(|c| c.iter().map(|&k| w * k as f64 / nf).collect()).collect();
    let std_errors: Vec<Vec<f64>> = counts
        .iter()
        .map(|c| {
            c.iter()
                .map(|&k| {
                    let p = k as f64 / nf;
                    w * (p * (1.0 - p) / nf).sqrt()
                })
                .collect()
        })
        .collect();

    let mut exact_violations = Vec::new();
    let mut excursions = Vec::new();
    let mut comparisons = 0;

    for i in 0..ns {
        for j in 1..nt {
            if counts[i][j] < counts[i][j - 1] {
                exact_violations.push(Violation {
                    direction: Direction::T,
                    s_index: i,
                    t_index: j,
                    amount: volumes[i][j - 1] - volumes[i][j],
                    sigmas: None,
                });
            }
            // per-point contribution to V_{j−1}/t_{j−1}^d − V_j/t_j^d
            let a = 1.0 / t_grid[j - 1].powi(d as i32) - 1.0 / t_grid[j].powi(d as i32);
            let b = -1.0 / t_grid[j].powi(d as i32);
            let inner = counts[i][j - 1] as f64 / nf;
            let shell = (counts[i][j] - counts[i][j - 1]) as f64 / nf;
            let mean = w * (inner * a + shell * b);
            let var = w * w * (inner * a * a + shell * b * b) - mean * mean;
            comparisons += 1;
            push_excursion(&mut excursions, Direction::Ratio, i, j, -mean, var, nf, tolerance_sigmas);
        }
    }

    if ns > 1 {
        for j in 0..nt {
            for i in 1..ns {
                let (mut gained, mut lost) = (0u64, 0u64);
                for row in &radii {
                    let before = row[i - 1] <= t_grid[j];
                    let after = row[i] <= t_grid[j];
                    gained += u64::from(after && !before);
                    lost += u64::from(before && !after);
                }
                let p_gain = gained as f64 / nf;
                let p_lost = lost as f64 / nf;
                let mean = w * (p_gain - p_lost);
                let var = w * w * (p_gain + p_lost) - mean * mean;
                comparisons += 1;
                push_excursion(&mut excursions, Direction::S, i, j, -mean, var, nf, tolerance_sigmas);
            }
        }
    }

    Ok(MonotonicityReport {
        s_grid: s_grid.to_vec(),
        t_grid: t_grid.to_vec(),
        volumes,
        std_errors,
        n_samples: n as u64,
        seed,
        tolerance_sigmas,
        exact_violations,
        statistical_excursions: excursions,
        statistical_comparisons: comparisons,
    })
}

#[allow(clippy::too_many_arguments)]
fn push_excursion(
    out: &mut Vec<Violation>,
    direction: Direction,
    s_index: usize,
    t_index: usize,
    amount: f64,
    var: f64,
    n: f64,
    tolerance_sigmas: f64,
) {
    let se = (var.max(0.0) / n).sqrt();
    if amount > 0.0 && amount > tolerance_sigmas * se {
        let sigmas = (se > 0.0).then(|| amount / se);
        out.push(Violation { direction, s_index, t_index, amount, sigmas });
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleMonotonicityReport {
    pub s_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub volumes: Vec<Vec<f64>>,
    pub violations: Vec<Violation>,
}

impl OracleMonotonicityReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// The same three checks on the exact volumes of `s{c1, c2} + tB_2^d`.
pub fn monotonicity_oracle_two_ball(
    c1: &[f64],
    c2: &[f64],
    s_grid: &[f64],
    t_grid: &[f64],
) -> Result<OracleMonotonicityReport> {
    check_grid("s grid", s_grid)?;
    check_grid("t grid", t_grid)?;
    if c1.len() != c2.len() || c1.is_empty() {
        return Err(invalid("centers must have the same positive dimension"));
    }
    let d = c1.len();
    let scale = |c: &[f64], s: f64| c.iter().map(|v| v * s).collect::<Vec<_>>();
    let volumes = s_grid
        .iter()
        .map(|&s| {
            t_grid
                .iter()
                .map(|&t| two_ball_union_volume(&scale(c1, s), &scale(c2, s), t, d))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut violations = Vec::new();
    let mut check = |direction, i, j, prev: f64, next: f64| {
        // `next` should be at least `prev`
        let amount = prev - next;
        if amount > ORACLE_TOL * prev.abs().max(1.0) {
            violations.push(Violation { direction, s_index: i, t_index: j, amount, sigmas: None });
        }
    };
    for (i, row) in volumes.iter().enumerate() {
        for j in 1..t_grid.len() {
            check(Direction::T, i, j, row[j - 1], row[j]);
            let pd = |k: usize| row[k] / t_grid[k].powi(d as i32);
            check(Direction::Ratio, i, j, pd(j), pd(j - 1));
        }
    }
    for i in 1..s_grid.len() {
        for j in 0..t_grid.len() {
            check(Direction::S, i, j, volumes[i - 1][j], volumes[i][j]);
        }
    }
    Ok(OracleMonotonicityReport { s_grid: s_grid.to_vec(), t_grid: t_grid.to_vec(), volumes, violations })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonotonicityConfig {
    pub points: Vec<Vec<f64>>,
    pub body: BodyKind,
    pub s_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
    pub tolerance_sigmas: f64,
}

impl Default for MonotonicityConfig {
    fn default() -> Self {
        MonotonicityConfig {
            points: vec![vec![0.0, 0.0], vec![1.0, 0.0]],
            body: BodyKind::Ball,
            s_grid: vec![0.5, 1.0, 2.0],
            t_grid: vec![0.5, 1.0, 2.0],
            n_samples: 200_000,
            seed: 0,
            tolerance_sigmas: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityRun {
    pub config: MonotonicityConfig,
    pub coupled: MonotonicityReport,
    /// Present for Euclidean-ball bodies with at most two points.
    pub oracle: Option<OracleMonotonicityReport>,
    pub pass: bool,
}

/// Coupled check on the configured cloud plus, when available, the exact
/// two-ball check on the same grids. `Box` bodies use unit half-widths.
pub fn monotonicity_run(cfg: &MonotonicityConfig) -> Result<MonotonicityRun> {
    let cloud = PointCloud::from_coords(cfg.points.clone())?;
    let d = cloud.dim();
    let body = match cfg.body {
        BodyKind::Ball => ConvexBody::unit_ball(),
        BodyKind::Box => ConvexBody::scaled_cube(&vec![1.0; d])?,
        BodyKind::CrossPolytope => ConvexBody::cross_polytope(d)?,
    };
    let coupled =
        monotonicity_check(&cloud, &body, &cfg.s_grid, &cfg.t_grid, cfg.n_samples, cfg.seed, cfg.tolerance_sigmas)?;
    let oracle = match (cfg.body, cloud.points()) {
        (BodyKind::Ball, [a]) => Some(monotonicity_oracle_two_ball(a, a, &cfg.s_grid, &cfg.t_grid)?),
        (BodyKind::Ball, [a, b]) => Some(monotonicity_oracle_two_ball(a, b, &cfg.s_grid, &cfg.t_grid)?),
        _ => None,
    };
    let pass = coupled.pass() && oracle.as_ref().is_none_or(|o| o.pass());
    Ok(MonotonicityRun { config: cfg.clone(), coupled, oracle, pass })
}

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::{ConvexBody, Point, PointCloud, Scene};
use crate::error::{invalid, Error, Result};
use crate::gaussian::{explicit_bound, gaussian_surface_fd, r_star, theorem_bound};
use crate::surface::{default_schedule, ratio_thm1};

/// Fraction of evaluated scenes allowed to exceed the bound by more than
/// `tolerance_sigmas` standard errors.
pub const ALLOWED_FAILURE_RATE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub dims: Vec<usize>,
    pub r_values: Vec<f64>,
    /// Scenes per dimension; scene `j` uses `r_values[j % len]`.
    pub n_scenes: usize,
    pub cloud_size_max: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub tolerance_sigmas: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            dims: vec![2, 3],
            r_values: vec![0.5, 1.0, 2.0],
            n_scenes: 100,
            cloud_size_max: 8,
            n_samples: 200_000,
            seed: 0,
            tolerance_sigmas: 3.0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.r_values.is_empty() {
            return Err(invalid("dims and r_values must be nonempty"));
        }
        if self.dims.contains(&0) {
            return Err(invalid("dims must be positive"));
        }
        if self.r_values.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
            return Err(invalid("r_values must be positive and finite"));
        }
        if self.n_scenes == 0 || self.cloud_size_max == 0 {
            return Err(invalid("n_scenes and cloud_size_max must be positive"));
        }
        if self.n_samples < 10_000 {
            return Err(invalid(format!("n_samples must be at least 1e4, got {}", self.n_samples)));
        }
        if !(self.tolerance_sigmas >= 0.0) {
            return Err(invalid("tolerance_sigmas must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Thm1,
    Thm2,
}

/// Bodies drawn by the scene generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyKind {
    /// Euclidean unit ball.
    Ball,
    /// Axis box with half-widths uniform in `[0.5, 1.5]`.
    Box,
    /// Unit `ℓ1` ball.
    CrossPolytope,
}

impl BodyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BodyKind::Ball => "ball",
            BodyKind::Box => "box",
            BodyKind::CrossPolytope => "cross_polytope",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub d: usize,
    pub index: usize,
    /// Seeds both the scene generator and the estimator for this record.
    pub seed: u64,
    pub digest: String,
    pub body: BodyKind,
    pub cloud_size: usize,
    pub r: f64,
    /// Surface/volume ratio (thm1) or Gaussian surface area (thm2).
    pub measured: f64,
    pub ci: f64,
    pub bound: f64,
    /// `(bound − measured) / ci`.
    pub margin_sigmas: f64,
    /// `B(d, min(r, r_*))`, thm2 only.
    pub explicit_bound: Option<f64>,
    pub pass: bool,
    /// Single-point cloud, where the thm1 bound is attained.
    pub tight: bool,
    /// Reason the scene was not evaluated.
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub kind: SweepKind,
    pub config: SweepConfig,
    pub records: Vec<SweepRecord>,
    pub evaluated: usize,
    pub passed: usize,
    pub skipped: usize,
    pub pass_rate: f64,
    pub pass: bool,
}

pub const SWEEP_CSV_HEADER: &str =
    "kind,d,index,seed,digest,body,cloud_size,r,measured,ci,bound,margin_sigmas,explicit_bound,pass,tight,skipped";

impl SweepReport {
    fn from_records(kind: SweepKind, config: SweepConfig, records: Vec<SweepRecord>) -> Self {
        let skipped = records.iter().filter(|r| r.skipped.is_some()).count();
        let evaluated = records.len() - skipped;
        let passed = records.iter().filter(|r| r.skipped.is_none() && r.pass).count();
        let pass_rate = if evaluated == 0 { 0.0 } else { passed as f64 / evaluated as f64 };
        let pass = evaluated > 0 && pass_rate >= 1.0 - ALLOWED_FAILURE_RATE;
        SweepReport { kind, config, records, evaluated, passed, skipped, pass_rate, pass }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{SWEEP_CSV_HEADER}")?;
        let kind = match self.kind {
            SweepKind::Thm1 => "thm1",
            SweepKind::Thm2 => "thm2",
        };
        for r in &self.records {
            writeln!(
                out,
                "{kind},{},{},{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{},{}",
                r.d,
                r.index,
                r.seed,
                r.digest,
                r.body.as_str(),
                r.cloud_size,
                r.r,
                r.measured,
                r.ci,
                r.bound,
                r.margin_sigmas,
                r.explicit_bound.map(|b| format!("{b:.16e}")).unwrap_or_default(),
                r.pass,
                r.tight,
                r.skipped.as_deref().unwrap_or("").replace(',', ";"),
            )?;
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of scene `index` in dimension `d` of a sweep seeded with `seed`.
pub fn scene_seed(seed: u64, d: usize, index: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ d as u64) ^ index as u64)
}

/// Generated scene plus the generator's choices.
#[derive(Debug, Clone)]
pub struct GeneratedScene {
    pub scene: Scene,
    pub body: BodyKind,
}

/// Draws a scene: cloud size uniform in `1..=cloud_size_max` (forced to 1 when
/// `single_point`), points uniform in `[−1, 1]^d`, body uniform over `menu`.
pub fn generate_scene(
    seed: u64,
    d: usize,
    r: f64,
    cloud_size_max: usize,
    single_point: bool,
    menu: &[BodyKind],
) -> Result<GeneratedScene> {
    if menu.is_empty() {
        return Err(invalid("body menu is empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = if single_point { 1 } else { rng.random_range(1..=cloud_size_max) };
    let points = (0..size)
        .map(|_| Point::new((0..d).map(|_| rng.random_range(-1.0..=1.0)).collect()))
        .collect::<Result<Vec<_>>>()?;
    let body = menu[rng.random_range(0..menu.len())];
    let k = match body {
        BodyKind::Ball => ConvexBody::unit_ball(),
        BodyKind::Box => {
            let hw: Vec<f64> = (0..d).map(|_| rng.random_range(0.5..=1.5)).collect();
            ConvexBody::scaled_cube(&hw)?
        }
        BodyKind::CrossPolytope => ConvexBody::cross_polytope(d)?,
    };
    Ok(GeneratedScene { scene: Scene::new(PointCloud::new(points)?, k, r)?, body })
}

pub const THM1_MENU: [BodyKind; 3] = [BodyKind::Ball, BodyKind::Box, BodyKind::CrossPolytope];
/// Gaussian surface bounds are Euclidean, so thm2 scenes use the ball only.
pub const THM2_MENU: [BodyKind; 1] = [BodyKind::Ball];

fn sweep_scene(cfg: &SweepConfig, kind: SweepKind, d: usize, index: usize) -> Result<(u64, GeneratedScene)> {
    let seed = scene_seed(cfg.seed, d, index);
    let r = cfg.r_values[index % cfg.r_values.len()];
    let menu: &[BodyKind] = match kind {
        SweepKind::Thm1 => &THM1_MENU,
        SweepKind::Thm2 => &THM2_MENU,
    };
    Ok((seed, generate_scene(seed, d, r, cfg.cloud_size_max, index.is_multiple_of(10), menu)?))
}

/// Re-runs one scene of a sweep. Output is bit-identical to the corresponding
/// record of the full sweep.
pub fn sweep_record(cfg: &SweepConfig, kind: SweepKind, d: usize, index: usize) -> Result<SweepRecord> {
    cfg.validate()?;
    let (seed, g) = sweep_scene(cfg, kind, d, index)?;
    let scene = &g.scene;
    let r = scene.r();
    let schedule = default_schedule(r);
    let mut record = SweepRecord {
        d,
        index,
        seed,
        digest: scene.digest(),
        body: g.body,
        cloud_size: scene.cloud().len(),
        r,
        measured: f64::NAN,
        ci: f64::NAN,
        bound: f64::NAN,
        margin_sigmas: f64::NAN,
        explicit_bound: None,
        pass: false,
        tight: scene.cloud().len() == 1,
        skipped: None,
    };
    let outcome = match kind {
        SweepKind::Thm1 => {
            ratio_thm1(scene, cfg.n_samples, seed, &schedule).map(|e| (e.ratio, e.ci, d as f64 / r, None))
        }
        SweepKind::Thm2 => gaussian_surface_fd(scene, &schedule, cfg.n_samples, seed).and_then(|e| {
            let b = explicit_bound(d, r.min(r_star(d)))?.explicit_bound;
            Ok((e.extrapolated, e.extrapolated_error, theorem_bound(d, r), Some(b)))
        }),
    };
    match outcome {
        Ok((measured, ci, bound, explicit)) => {
            record.measured = measured;
            record.ci = ci;
            record.bound = bound;
            record.margin_sigmas = (bound - measured) / ci;
            record.explicit_bound = explicit;
            record.pass = measured <= bound + cfg.tolerance_sigmas * ci;
        }
        Err(e @ Error::IllConditioned(_)) => record.skipped = Some(e.to_string()),
        Err(e) => return Err(e),
    }
    Ok(record)
}

fn run_sweep(cfg: &SweepConfig, kind: SweepKind) -> Result<SweepReport> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> =
        cfg.dims.iter().flat_map(|&d| (0..cfg.n_scenes).map(move |j| (d, j))).collect();
    let records = jobs
        .par_iter()
        .map(|&(d, j)| sweep_record(cfg, kind, d, j))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport::from_records(kind, cfg.clone(), records))
}

/// Surface-to-volume ratio of random parallel sets against `d/r`.
pub fn thm1_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    run_sweep(cfg, SweepKind::Thm1)
}

/// Gaussian surface area of random Euclidean parallel sets against
/// `18d · max(√d, 1/r)`.
pub fn thm2_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    run_sweep(cfg, SweepKind::Thm2)
}

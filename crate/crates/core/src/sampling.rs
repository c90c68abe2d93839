//! Seeded, chunked sampling of inclusion radii.
//!
//! Samples are generated in fixed-size chunks. Chunk `k` draws from a ChaCha8
//! stream keyed by `(seed, k)`, so sample `i` is the same value no matter how
//! many workers run or in which order chunks complete.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::bodies::{BoundingBox, ConvexBody, ParallelHalfspace, Scene};

pub const CHUNK_LEN: usize = 4096;

/// A closed set of the form `A + rK` that can report, for any point, the
/// smallest enlargement radius at which it is covered.
pub trait ParallelSet: Sync {
    fn dim(&self) -> usize;

    /// The radius `r` of the set `A + rK` itself.
    fn radius(&self) -> f64;

    /// Smallest `t >= 0` with `x ∈ A + tK`; `x.len() == self.dim()`.
    fn inclusion_radius(&self, x: &[f64]) -> f64;

    /// `ρ` when the body is the Euclidean ball `ρB`, so that a gauge shell of
    /// width `ε` has Euclidean width `ρε`.
    fn euclidean_scale(&self) -> Option<f64>;
}

impl ParallelSet for Scene {
    fn dim(&self) -> usize {
        Scene::dim(self)
    }

    fn radius(&self) -> f64 {
        self.r()
    }

    fn inclusion_radius(&self, x: &[f64]) -> f64 {
        self.inclusion_radius_unchecked(x)
    }

    fn euclidean_scale(&self) -> Option<f64> {
        match self.body() {
            ConvexBody::Ball(b) => Some(b.radius()),
            _ => None,
        }
    }
}

impl ParallelSet for ParallelHalfspace {
    fn dim(&self) -> usize {
        ParallelHalfspace::dim(self)
    }

    fn radius(&self) -> f64 {
        self.r()
    }

    fn inclusion_radius(&self, x: &[f64]) -> f64 {
        self.inclusion_radius_unchecked(x)
    }

    fn euclidean_scale(&self) -> Option<f64> {
        Some(1.0)
    }
}

#[derive(Debug, Clone)]
pub enum Sampler {
    Uniform(BoundingBox),
    StandardNormal { dim: usize },
}

impl Sampler {
    pub fn dim(&self) -> usize {
        match self {
            Sampler::Uniform(b) => b.dim(),
            Sampler::StandardNormal { dim } => *dim,
        }
    }

    fn fill(&self, rng: &mut ChaCha8Rng, x: &mut [f64]) {
        match self {
            Sampler::Uniform(b) => {
                for ((xi, lo), hi) in x.iter_mut().zip(b.lo()).zip(b.hi()) {
                    *xi = lo + (hi - lo) * rng.random::<f64>();
                }
            }
            Sampler::StandardNormal { .. } => {
                for xi in x.iter_mut() {
                    *xi = rng.sample(StandardNormal);
                }
            }
        }
    }
}

pub(crate) fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Applies `f` to samples `0..n` in order; results are independent of the
/// rayon pool size.
pub fn map_samples<T, F>(sampler: &Sampler, n: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&[f64]) -> T + Sync,
{
    let d = sampler.dim();
    let chunks = n.div_ceil(CHUNK_LEN);
    let parts: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let len = CHUNK_LEN.min(n - k * CHUNK_LEN);
            let mut rng = chunk_rng(seed, k);
            let mut x = vec![0.0; d];
            (0..len)
                .map(|_| {
                    sampler.fill(&mut rng, &mut x);
                    f(&x)
                })
                .collect()
        })
        .collect();
    parts.into_iter().flatten().collect()
}

/// Inclusion radii of `n` seeded samples, sorted ascending.
///
/// Every coupled estimate (volumes at several radii, shell quotients) is an
/// integer count over this one sample, which makes hit sets nested in the
/// radius.
#[derive(Debug, Clone)]
pub struct RadiusSample {
    sorted: Vec<f64>,
    /// Measure of the sampling domain: box volume, or 1 for Gaussian samples.
    weight: f64,
    seed: u64,
}

impl RadiusSample {
    pub fn draw<S: ParallelSet + ?Sized>(set: &S, sampler: &Sampler, n: usize, seed: u64) -> Self {
        assert_eq!(set.dim(), sampler.dim(), "sampler dimension must match the set");
        let mut sorted = map_samples(sampler, n, seed, |x| set.inclusion_radius(x));
        sorted.sort_by(f64::total_cmp);
        let weight = match sampler {
            Sampler::Uniform(b) => b.volume(),
            Sampler::StandardNormal { .. } => 1.0,
        };
        RadiusSample { sorted, weight, seed }
    }

    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of samples with inclusion radius `<= t`.
    pub fn hits(&self, t: f64) -> u64 {
        self.sorted.partition_point(|&rho| rho <= t) as u64
    }

    /// Number of samples with `lo < rho <= hi`.
    pub fn hits_between(&self, lo: f64, hi: f64) -> u64 {
        self.hits(hi) - self.hits(lo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::{ConvexBody, Point, PointCloud};

    fn unit_disk() -> Scene {
        Scene::new(PointCloud::singleton(Point::origin(2)), ConvexBody::unit_ball(), 1.0).unwrap()
    }

    #[test]
    fn sample_stream_is_independent_of_worker_count() {
        let s = unit_disk();
        let sampler = Sampler::Uniform(s.bounding_box());
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| map_samples(&sampler, 3 * CHUNK_LEN + 17, 99, |x| ParallelSet::inclusion_radius(&s, x)))
        };
        let one: Vec<u64> = run(1).into_iter().map(f64::to_bits).collect();
        let four: Vec<u64> = run(4).into_iter().map(f64::to_bits).collect();
        assert_eq!(one, four);
    }

    #[test]
    fn prefix_of_longer_run_is_shorter_run() {
        let sampler = Sampler::StandardNormal { dim: 3 };
        let a = map_samples(&sampler, 5000, 1, |x| x.to_vec());
        let b = map_samples(&sampler, 9000, 1, |x| x.to_vec());
        assert_eq!(a[..], b[..5000]);
        let c = map_samples(&sampler, 5000, 2, |x| x.to_vec());
        assert_ne!(a, c);
    }

    #[test]
    fn hits_are_nested() {
        let s = unit_disk();
        let sample = RadiusSample::draw(&s, &Sampler::Uniform(s.bounding_box()), 10_000, 3);
        let mut prev = 0;
        for k in 0..50 {
            let h = sample.hits(k as f64 * 0.03);
            assert!(h >= prev);
            prev = h;
        }
        assert_eq!(sample.hits(f64::INFINITY), 10_000);
    }
}

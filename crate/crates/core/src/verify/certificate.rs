use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::{BoundingBox, ParallelHalfspace, Scene};
use crate::error::{invalid, Result};

/// Largest grid the certificate will allocate.
pub const MAX_GRID_NODES: usize = 50_000_000;

type Membership = Box<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// A closed region given by a membership predicate, inspected on a window.
pub struct RegionOracle {
    membership: Membership,
    window: BoundingBox,
    description: String,
}

impl fmt::Debug for RegionOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RegionOracle")
            .field("window", &self.window)
            .field("description", &self.description)
            .finish_non_exhaustive()
    }
}

impl RegionOracle {
    pub fn new<F>(membership: F, window: BoundingBox, description: impl Into<String>) -> Self
    where
        F: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        RegionOracle { membership: Box::new(membership), window, description: description.into() }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (self.membership)(x)
    }

    pub fn window(&self) -> &BoundingBox {
        &self.window
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// `{x : ⟨n, x⟩ <= offset}`.
    pub fn closed_halfspace(normal: Vec<f64>, offset: f64, window: BoundingBox) -> Result<Self> {
        if normal.len() != window.dim() || normal.iter().all(|&v| v == 0.0) {
            return Err(invalid("halfspace normal must be nonzero with the window's dimension"));
        }
        let description = format!("closed halfspace <{normal:?}, x> <= {offset}");
        Ok(RegionOracle::new(
            move |x| normal.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() <= offset,
            window,
            description,
        ))
    }

    /// `R^d` minus the open box `(lo, hi)`.
    pub fn open_box_complement(lo: Vec<f64>, hi: Vec<f64>, window: BoundingBox) -> Result<Self> {
        let inner = BoundingBox::new(lo, hi)?;
        if inner.dim() != window.dim() {
            return Err(invalid("box and window dimensions differ"));
        }
        let description = format!("complement of open box {:?}..{:?}", inner.lo(), inner.hi());
        Ok(RegionOracle::new(
            move |x| !x.iter().enumerate().all(|(i, &v)| inner.lo()[i] < v && v < inner.hi()[i]),
            window,
            description,
        ))
    }

    /// The closed box `[lo, hi]`.
    pub fn closed_box(lo: Vec<f64>, hi: Vec<f64>, window: BoundingBox) -> Result<Self> {
        let inner = BoundingBox::new(lo, hi)?;
        if inner.dim() != window.dim() {
            return Err(invalid("box and window dimensions differ"));
        }
        let description = format!("closed box {:?}..{:?}", inner.lo(), inner.hi());
        Ok(RegionOracle::new(
            move |x| x.iter().enumerate().all(|(i, &v)| inner.lo()[i] <= v && v <= inner.hi()[i]),
            window,
            description,
        ))
    }

    /// `R^d` minus the open Euclidean ball of radius `rho` about `center`.
    pub fn open_ball_complement(center: Vec<f64>, rho: f64, window: BoundingBox) -> Result<Self> {
        if center.len() != window.dim() || !(rho > 0.0) {
            return Err(invalid("ball complement needs a positive radius and matching dimension"));
        }
        let description = format!("complement of open ball at {center:?} radius {rho}");
        Ok(RegionOracle::new(
            move |x| center.iter().zip(x).map(|(c, v)| (v - c) * (v - c)).sum::<f64>() >= rho * rho,
            window,
            description,
        ))
    }

    /// `{x : contains(scene, x)}` on `window`.
    pub fn scene_image(scene: Scene, window: BoundingBox) -> Result<Self> {
        if scene.dim() != window.dim() {
            return Err(invalid("scene and window dimensions differ"));
        }
        let description = format!("scene {}", scene.digest());
        Ok(RegionOracle::new(move |x| scene.contains(x).unwrap_or(false), window, description))
    }

    /// `{x : x ∈ H + rB}` for the closed halfspace given in core form.
    pub fn parallel_halfspace(set: ParallelHalfspace, window: BoundingBox) -> Result<Self> {
        if set.dim() != window.dim() {
            return Err(invalid("halfspace and window dimensions differ"));
        }
        let description = format!("parallel halfspace r = {}", set.r());
        Ok(RegionOracle::new(move |x| set.contains(x).unwrap_or(false), window, description))
    }
}

/// Fixtures on the unit square, `d = 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fixture {
    /// `{x₁ >= 0}` on `[−2, 2]²`.
    Halfspace,
    /// `R² \ (0, 1)²` on `[−1, 2]²`.
    SquareComplement,
    /// `[0, 1]²` on `[−1, 2]²`.
    ClosedSquare,
}

impl Fixture {
    pub fn oracle(self) -> RegionOracle {
        let unit = || (vec![0.0, 0.0], vec![1.0, 1.0]);
        let res = match self {
            Fixture::Halfspace => {
                RegionOracle::closed_halfspace(vec![-1.0, 0.0], 0.0, BoundingBox::cube(2, -2.0, 2.0).expect("valid"))
            }
            Fixture::SquareComplement => {
                let (lo, hi) = unit();
                RegionOracle::open_box_complement(lo, hi, BoundingBox::cube(2, -1.0, 2.0).expect("valid"))
            }
            Fixture::ClosedSquare => {
                let (lo, hi) = unit();
                RegionOracle::closed_box(lo, hi, BoundingBox::cube(2, -1.0, 2.0).expect("valid"))
            }
        };
        res.expect("fixture parameters are valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub pass: bool,
    /// Cells of the region inside the shrunken window not reached by the
    /// dilated erosion.
    pub witnesses: Vec<Vec<f64>>,
    pub r: f64,
    pub h: f64,
    pub grid_shape: Vec<usize>,
    pub checked_cells: usize,
}

/// Exact squared Euclidean distance transform of a sampled function along one
/// line (lower envelope of parabolas). Infinite entries are ignored.
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut Vec<usize>, z: &mut Vec<f64>) {
    v.clear();
    z.clear();
    for (q, &fq) in f.iter().enumerate() {
        if !fq.is_finite() {
            continue;
        }
        let qf = q as f64;
        loop {
            match v.last() {
                None => {
                    v.push(q);
                    z.push(f64::NEG_INFINITY);
                    break;
                }
                Some(&p) => {
                    let pf = p as f64;
                    let s = ((fq + qf * qf) - (f[p] + pf * pf)) / (2.0 * (qf - pf));
                    if s <= *z.last().expect("paired with v") {
                        v.pop();
                        z.pop();
                    } else {
                        v.push(q);
                        z.push(s);
                        break;
                    }
                }
            }
        }
    }
    if v.is_empty() {
        out.fill(f64::INFINITY);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        let qf = q as f64;
        while k + 1 < v.len() && z[k + 1] < qf {
            k += 1;
        }
        let dq = qf - v[k] as f64;
        *o = dq * dq + f[v[k]];
    }
}

/// Squared distance, in grid units, from every node to the nearest node with
/// `seed[node]` set.
fn squared_distance_to(seed: &[bool], shape: &[usize]) -> Vec<f64> {
    let mut field: Vec<f64> = seed.iter().map(|&s| if s { 0.0 } else { f64::INFINITY }).collect();
    let total = field.len();
    let mut stride = 1;
    for &len in shape.iter().rev() {
        let lines = total / len;
        let starts: Vec<usize> = (0..lines).map(|l| (l / stride) * stride * len + l % stride).collect();
        let results: Vec<Vec<f64>> = starts
            .par_iter()
            .map_init(
                || (Vec::new(), Vec::new()),
                |(v, z), &start| {
                    let line: Vec<f64> = (0..len).map(|k| field[start + k * stride]).collect();
                    let mut out = vec![0.0; len];
                    edt_1d(&line, &mut out, v, z);
                    out
                },
            )
            .collect();
        for (start, out) in starts.iter().zip(results) {
            for (k, val) in out.into_iter().enumerate() {
                field[start + k * stride] = val;
            }
        }
        stride *= len;
    }
    field
}

/// Grid test of the opening property `S = ∪{x + rB : x + rB ⊆ S}` on the
/// window, `d <= 3`.
///
/// The region is sampled on nodes `lo − m + k·h` over the window inflated by
/// `m = r + 2h√d + h`. A node is eroded when its distance to the nearest
/// node outside `S` exceeds `r − h√d`; a node is covered when it lies within
/// `r + 2h√d` of an eroded node. Every node of `S` inside the window shrunk by
/// `r` must be covered.
pub fn r_parallel_certificate(region: &RegionOracle, r: f64, h: f64) -> Result<Certificate> {
    let window = region.window();
    let d = window.dim();
    if d == 0 || d > 3 {
        return Err(invalid(format!("certificate supports 1 <= d <= 3, got {d}")));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(invalid(format!("r must be positive, got {r}")));
    }
    if !(h > 0.0) || h > r / 10.0 * (1.0 + 1e-12) {
        return Err(invalid(format!("grid step {h} is too coarse for r = {r}; need h <= r/10")));
    }
    let root_d = (d as f64).sqrt();
    let band = 2.0 * h * root_d;
    let margin = r + band + h;
    let lo: Vec<f64> = window.lo().iter().map(|v| v - margin).collect();
    let shape: Vec<usize> = (0..d)
        .map(|i| ((window.hi()[i] + margin - lo[i]) / h).ceil() as usize + 1)
        .collect();
    let total = shape.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n));
    let total = match total {
        Some(t) if t <= MAX_GRID_NODES => t,
        _ => return Err(invalid(format!("grid {shape:?} exceeds {MAX_GRID_NODES} nodes"))),
    };

    // row-major, last axis fastest
    let node = |idx: usize| -> Vec<f64> {
        let mut rem = idx;
        let mut x = vec![0.0; d];
        for i in (0..d).rev() {
            x[i] = lo[i] + (rem % shape[i]) as f64 * h;
            rem /= shape[i];
        }
        x
    };
    let inside: Vec<bool> = (0..total).into_par_iter().map(|i| region.contains(&node(i))).collect();

    let outside: Vec<bool> = inside.iter().map(|&b| !b).collect();
    let to_outside = squared_distance_to(&outside, &shape);
    let erode = ((r - h * root_d) / h).max(0.0);
    let eroded: Vec<bool> = inside.iter().zip(&to_outside).map(|(&s, &q)| s && q > erode * erode).collect();
    let to_eroded = squared_distance_to(&eroded, &shape);
    let reach = (r + band) / h;

    const EDGE_TOL: f64 = 1e-9;
    let mut checked = 0;
    let mut witnesses = Vec::new();
    for i in 0..total {
        if !inside[i] {
            continue;
        }
        let x = node(i);
        let in_core = (0..d).all(|k| {
            x[k] >= window.lo()[k] + r - EDGE_TOL && x[k] <= window.hi()[k] - r + EDGE_TOL
        });
        if !in_core {
            continue;
        }
        checked += 1;
        if to_eroded[i] > reach * reach {
            witnesses.push(x);
        }
    }
    Ok(Certificate { pass: witnesses.is_empty(), witnesses, r, h, grid_shape: shape, checked_cells: checked })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn edt_matches_brute_force() {
        let shape = [7, 5, 4];
        let seed: Vec<bool> = (0..140).map(|i| (i * 37 + 11) % 23 == 0).collect();
        let got = squared_distance_to(&seed, &shape);
        let coords = |i: usize| [(i / 20) as f64, ((i / 4) % 5) as f64, (i % 4) as f64];
        for i in 0..140 {
            let want = (0..140)
                .filter(|&j| seed[j])
                .map(|j| {
                    let (a, b) = (coords(i), coords(j));
                    (0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min);
            assert_eq!(got[i], want, "node {i}");
        }
        assert!(squared_distance_to(&[false; 6], &[2, 3]).iter().all(|v| v.is_infinite()));
    }

    #[test]
    fn fixtures() {
        let cert = r_parallel_certificate(&Fixture::Halfspace.oracle(), 1.0, 0.05).unwrap();
        assert!(cert.pass && cert.checked_cells > 0);
        let cert = r_parallel_certificate(&Fixture::SquareComplement.oracle(), 0.5, 0.02).unwrap();
        assert!(cert.pass, "{:?}", &cert.witnesses[..cert.witnesses.len().min(5)]);
        let cert = r_parallel_certificate(&Fixture::ClosedSquare.oracle(), 0.5, 0.02).unwrap();
        assert!(!cert.pass);
        for corner in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]] {
            let near = cert.witnesses.iter().any(|w| ((w[0] - corner[0]).powi(2) + (w[1] - corner[1]).powi(2)).sqrt() <= 2.0 * 0.02 * 2f64.sqrt());
            assert!(near, "no witness near {corner:?}");
        }
        for w in &cert.witnesses {
            let dc = ((w[0] - 0.5).powi(2) + (w[1] - 0.5).powi(2)).sqrt();
            assert!(dc > 0.5 - 2.0 * 0.02 * 2f64.sqrt(), "{w:?} is inside the inscribed disk");
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let o = Fixture::Halfspace.oracle();
        assert!(r_parallel_certificate(&o, 0.5, 0.06).is_err());
        assert!(r_parallel_certificate(&o, 0.0, 0.01).is_err());
        let w4 = BoundingBox::cube(4, 0.0, 1.0).unwrap();
        let o4 = RegionOracle::new(|_| true, w4, "everything");
        assert!(r_parallel_certificate(&o4, 1.0, 0.1).is_err());
    }

    #[test]
    fn one_and_three_dimensions() {
        let o = RegionOracle::closed_box(vec![0.0], vec![2.0], BoundingBox::cube(1, -1.0, 3.0).unwrap()).unwrap();
        assert!(r_parallel_certificate(&o, 0.5, 0.01).unwrap().pass);
        assert!(!r_parallel_certificate(&o, 1.2, 0.01).unwrap().pass);
        let o = RegionOracle::open_ball_complement(vec![0.0; 3], 0.6, BoundingBox::cube(3, -1.0, 1.0).unwrap()).unwrap();
        assert!(r_parallel_certificate(&o, 0.3, 0.03).unwrap().pass);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn pass_is_monotone_in_r(
            cx in -0.5f64..0.5, cy in -0.5f64..0.5, wx in 0.1f64..1.0, wy in 0.1f64..1.0,
            rho in 0.2f64..0.8, use_ball in any::<bool>(),
        ) {
            let window = BoundingBox::cube(2, -1.5, 1.5).unwrap();
            let region = if use_ball {
                RegionOracle::open_ball_complement(vec![cx, cy], rho, window).unwrap()
            } else {
                RegionOracle::open_box_complement(vec![cx - wx, cy - wy], vec![cx + wx, cy + wy], window).unwrap()
            };
            let h = 0.02;
            let passes: Vec<bool> = [0.2, 0.3, 0.45].iter()
                .map(|&r| r_parallel_certificate(&region, r, h).unwrap().pass)
                .collect();
            for k in 1..passes.len() {
                prop_assert!(!passes[k] || passes[k - 1], "{passes:?}");
            }
        }
    }
}

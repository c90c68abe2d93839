//! Points, convex bodies and `(r, K)`-parallel scenes `A + rK`.
//!
//! A [`Scene`] is a finite point cloud `A`, a compact convex body `K` with the
//! origin in its interior, and a radius `r > 0`. Membership in `A + rK` is
//! decided through the gauge of `K`: `x ∈ A + rK` iff `min_a gauge(x − a) <= r`.

use std::collections::HashSet;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::lp::{maximize_free, LpOutcome};

/// Absolute slack for geometric predicates.
pub const GEOM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(invalid("point must have at least one coordinate"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("point coordinates must be finite"));
        }
        Ok(Point(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    /// The `i`-th standard basis vector scaled by `scale`.
    pub fn axis(dim: usize, i: usize, scale: f64) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = scale;
        Point(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// The finite set `A`. Exact duplicates are dropped on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    points: Vec<Point>,
}

impl PointCloud {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let dim = points
            .first()
            .ok_or_else(|| invalid("point cloud must be nonempty"))?
            .dim();
        let mut seen = HashSet::new();
        let mut unique = Vec::with_capacity(points.len());
        for p in points {
            check_dim(dim, p.dim())?;
            // -0.0 and 0.0 compare equal, so key on the normalized bit pattern.
            let key: Vec<u64> = p.iter().map(|&c| (c + 0.0).to_bits()).collect();
            if seen.insert(key) {
                unique.push(p);
            }
        }
        Ok(PointCloud { dim, points: unique })
    }

    pub fn from_coords(coords: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(coords.into_iter().map(Point::new).collect::<Result<_>>()?)
    }

    pub fn singleton(p: Point) -> Self {
        PointCloud { dim: p.dim(), points: vec![p] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The dilated cloud `sA`.
    pub fn scaled(&self, s: f64) -> Self {
        Self::new(
            self.points
                .iter()
                .map(|p| Point(p.iter().map(|c| c * s).collect()))
                .collect(),
        )
        .expect("scaling preserves cloud invariants")
    }
}

/// Closed halfspace `normal · x <= offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Halfspace {
    pub normal: Point,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    radius: f64,
}

impl Ball {
    pub fn radius(&self) -> f64 {
        self.radius
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HPolytope {
    dim: usize,
    halfspaces: Vec<Halfspace>,
    // normals divided by their offsets, row-major; gauge(v) = max_i scaled_i · v
    scaled: Vec<f64>,
    rows: Vec<f64>,
    offsets: Vec<f64>,
    axis_support: Vec<[f64; 2]>,
}

impl HPolytope {
    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    fn gauge(&self, v: &[f64]) -> f64 {
        self.scaled
            .chunks_exact(self.dim)
            .map(|row| dot(row, v))
            .fold(0.0, f64::max)
    }

    fn support(&self, u: &[f64]) -> Result<f64> {
        match maximize_free(&self.rows, &self.offsets, u).map_err(Error::Lp)? {
            LpOutcome::Optimal(v) => Ok(v),
            LpOutcome::Unbounded => Err(Error::Unbounded(format!("support in direction {u:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VPolytope {
    dim: usize,
    vertices: Vec<Point>,
    rows: Vec<f64>,
    ones: Vec<f64>,
    axis_support: Vec<[f64; 2]>,
    circumradius: f64,
}

impl VPolytope {
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Gauge by LP duality: `gauge_K(v) = max { v·y : w_j·y <= 1 for all vertices w_j }`.
    fn gauge(&self, v: &[f64]) -> Result<f64> {
        match maximize_free(&self.rows, &self.ones, v).map_err(Error::Lp)? {
            LpOutcome::Optimal(g) => Ok(g.max(0.0)),
            LpOutcome::Unbounded => Err(Error::OriginNotInterior("polar LP unbounded".into())),
        }
    }

    fn support(&self, u: &[f64]) -> f64 {
        self.vertices
            .iter()
            .map(|w| dot(w, u))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A compact convex body with the origin in its interior.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexBody {
    Ball(Ball),
    HPolytope(HPolytope),
    VPolytope(VPolytope),
}

impl ConvexBody {
    pub fn ball(radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(invalid(format!("ball radius must be positive and finite, got {radius}")));
        }
        Ok(ConvexBody::Ball(Ball { radius }))
    }

    pub fn unit_ball() -> Self {
        ConvexBody::Ball(Ball { radius: 1.0 })
    }

    pub fn hpolytope(halfspaces: Vec<Halfspace>) -> Result<Self> {
        let dim = halfspaces
            .first()
            .ok_or_else(|| invalid("hpolytope needs at least one halfspace"))?
            .normal
            .dim();
        let mut rows = Vec::with_capacity(dim * halfspaces.len());
        let mut scaled = Vec::with_capacity(dim * halfspaces.len());
        let mut offsets = Vec::with_capacity(halfspaces.len());
        for h in &halfspaces {
            check_dim(dim, h.normal.dim())?;
            if norm(&h.normal) == 0.0 {
                return Err(invalid("halfspace normal must be nonzero"));
            }
            if !h.offset.is_finite() {
                return Err(invalid("halfspace offset must be finite"));
            }
            if h.offset <= 0.0 {
                return Err(Error::OriginNotInterior(format!(
                    "halfspace offset {} must be positive",
                    h.offset
                )));
            }
            rows.extend_from_slice(&h.normal);
            scaled.extend(h.normal.iter().map(|n| n / h.offset));
            offsets.push(h.offset);
        }
        let mut poly = HPolytope {
            dim,
            halfspaces,
            scaled,
            rows,
            offsets,
            axis_support: Vec::new(),
        };
        // Bounded iff the support is finite along every signed axis.
        let mut axis_support = Vec::with_capacity(dim);
        for i in 0..dim {
            let neg = poly.support(&Point::axis(dim, i, -1.0))?;
            let pos = poly.support(&Point::axis(dim, i, 1.0))?;
            axis_support.push([neg, pos]);
        }
        poly.axis_support = axis_support;
        Ok(ConvexBody::HPolytope(poly))
    }

    pub fn vpolytope(vertices: Vec<Point>) -> Result<Self> {
        let dim = vertices
            .first()
            .ok_or_else(|| invalid("vpolytope needs at least one vertex"))?
            .dim();
        let mut rows = Vec::with_capacity(dim * vertices.len());
        for v in &vertices {
            check_dim(dim, v.dim())?;
            rows.extend_from_slice(v);
        }
        let ones = vec![1.0; vertices.len()];
        // The origin is interior iff the polar body is bounded.
        for i in 0..dim {
            for sign in [-1.0, 1.0] {
                let c = Point::axis(dim, i, sign);
                if maximize_free(&rows, &ones, &c).map_err(Error::Lp)? == LpOutcome::Unbounded {
                    return Err(Error::OriginNotInterior(
                        "origin is not strictly inside the vertex hull".into(),
                    ));
                }
            }
        }
        let circumradius = vertices.iter().map(|v| norm(v)).fold(0.0, f64::max);
        let mut poly = VPolytope {
            dim,
            vertices,
            rows,
            ones,
            axis_support: Vec::new(),
            circumradius,
        };
        poly.axis_support = (0..dim)
            .map(|i| {
                [
                    poly.support(&Point::axis(dim, i, -1.0)),
                    poly.support(&Point::axis(dim, i, 1.0)),
                ]
            })
            .collect();
        Ok(ConvexBody::VPolytope(poly))
    }

    /// Axis-aligned box `[-a_1, a_1] x ... x [-a_d, a_d]` in halfspace form.
    pub fn scaled_cube(half_widths: &[f64]) -> Result<Self> {
        let dim = half_widths.len();
        let mut hs = Vec::with_capacity(2 * dim);
        for (i, &a) in half_widths.iter().enumerate() {
            for sign in [1.0, -1.0] {
                hs.push(Halfspace { normal: Point::axis(dim, i, sign), offset: a });
            }
        }
        Self::hpolytope(hs)
    }

    /// The cross-polytope `{x : |x|_1 <= 1}` with its `2^d` facets.
    pub fn cross_polytope(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        let hs = (0..1usize << dim)
            .map(|mask| Halfspace {
                normal: Point((0..dim).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect()),
                offset: 1.0,
            })
            .collect();
        Self::hpolytope(hs)
    }

    /// `None` for balls, which exist in every dimension.
    pub fn dim(&self) -> Option<usize> {
        match self {
            ConvexBody::Ball(_) => None,
            ConvexBody::HPolytope(p) => Some(p.dim),
            ConvexBody::VPolytope(p) => Some(p.dim),
        }
    }

    fn check(&self, got: usize) -> Result<()> {
        match self.dim() {
            Some(d) => check_dim(d, got),
            None => Ok(()),
        }
    }

    /// Minkowski functional `inf { t >= 0 : v ∈ tK }`.
    pub fn gauge(&self, v: &[f64]) -> Result<f64> {
        self.check(v.len())?;
        match self {
            ConvexBody::Ball(b) => Ok(norm(v) / b.radius),
            ConvexBody::HPolytope(p) => Ok(p.gauge(v)),
            ConvexBody::VPolytope(p) => p.gauge(v),
        }
    }

    /// Support function `sup { x·u : x ∈ K }`.
    pub fn support(&self, u: &[f64]) -> Result<f64> {
        self.check(u.len())?;
        if u.iter().all(|&c| c == 0.0) {
            return Err(invalid("support direction must be nonzero"));
        }
        match self {
            ConvexBody::Ball(b) => Ok(b.radius * norm(u)),
            ConvexBody::HPolytope(p) => p.support(u),
            ConvexBody::VPolytope(p) => Ok(p.support(u)),
        }
    }

    /// `[h_K(-e_i), h_K(e_i)]` for axis `i`.
    fn axis_support(&self, i: usize) -> [f64; 2] {
        match self {
            ConvexBody::Ball(b) => [b.radius, b.radius],
            ConvexBody::HPolytope(p) => p.axis_support[i],
            ConvexBody::VPolytope(p) => p.axis_support[i],
        }
    }

    /// Volume of `K` when it has a closed form (balls only).
    pub fn volume(&self, dim: usize) -> Option<f64> {
        match self {
            ConvexBody::Ball(b) => Some(crate::measure::ball_volume(dim, b.radius).ok()?),
            _ => None,
        }
    }

    pub fn is_ball(&self) -> bool {
        matches!(self, ConvexBody::Ball(_))
    }
}

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        if lo.is_empty() {
            return Err(invalid("box must have positive dimension"));
        }
        for (l, h) in lo.iter().zip(&hi) {
            if !l.is_finite() || !h.is_finite() || h < l {
                return Err(invalid(format!("invalid box side [{l}, {h}]")));
            }
        }
        Ok(BoundingBox { lo, hi })
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(c, (l, h))| *c >= l - GEOM_TOL && *c <= h + GEOM_TOL)
    }

    /// Grows (or, for negative `margin`, shrinks) every side by `margin`.
    pub fn inflate(&self, margin: f64) -> Result<Self> {
        Self::new(
            self.lo.iter().map(|l| l - margin).collect(),
            self.hi.iter().map(|h| h + margin).collect(),
        )
    }
}

/// The closed halfspace `{x : n·x <= c + r}` written as the parallel set
/// `A + rB` with `A = {x : n·x <= c}` and `n` a unit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelHalfspace {
    normal: Vec<f64>,
    core_offset: f64,
    r: f64,
}

impl ParallelHalfspace {
    /// `{x : normal·x <= offset}` as an `r`-parallel set; `normal` need not be unit.
    pub fn from_closed(normal: &[f64], offset: f64, r: f64) -> Result<Self> {
        let len = norm(normal);
        if !(len > 0.0) || !len.is_finite() || !offset.is_finite() {
            return Err(invalid("halfspace needs a finite nonzero normal and finite offset"));
        }
        if !(r > 0.0) || !r.is_finite() {
            return Err(invalid(format!("radius must be positive and finite, got {r}")));
        }
        Ok(ParallelHalfspace {
            normal: normal.iter().map(|c| c / len).collect(),
            core_offset: offset / len - r,
            r,
        })
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    /// Offset `c` of the eroded halfspace `A = {n·x <= c}`.
    pub fn core_offset(&self) -> f64 {
        self.core_offset
    }

    pub(crate) fn inclusion_radius_unchecked(&self, x: &[f64]) -> f64 {
        (dot(&self.normal, x) - self.core_offset).max(0.0)
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        check_dim(self.dim(), x.len())?;
        Ok(self.inclusion_radius_unchecked(x) <= self.r + GEOM_TOL)
    }
}

#[derive(Debug, Clone)]
enum Accel {
    Ball { inv_radius: f64 },
    // per cloud point a, the values (n_i · a) / b_i
    HPoly { shifted: Vec<f64> },
    VPoly,
}

/// The `(r, K)`-parallel set `A + rK`.
#[derive(Debug, Clone)]
pub struct Scene {
    cloud: PointCloud,
    body: ConvexBody,
    r: f64,
    accel: Accel,
}

impl PartialEq for Scene {
    fn eq(&self, other: &Self) -> bool {
        self.cloud == other.cloud && self.body == other.body && self.r == other.r
    }
}

impl Scene {
    pub fn new(cloud: PointCloud, body: ConvexBody, r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(invalid(format!("radius must be positive and finite, got {r}")));
        }
        body.check(cloud.dim())?;
        let accel = match &body {
            ConvexBody::Ball(b) => Accel::Ball { inv_radius: 1.0 / b.radius },
            ConvexBody::HPolytope(p) => Accel::HPoly {
                shifted: cloud
                    .points()
                    .iter()
                    .flat_map(|a| p.scaled.chunks_exact(p.dim).map(move |row| dot(row, a)))
                    .collect(),
            },
            ConvexBody::VPolytope(_) => Accel::VPoly,
        };
        Ok(Scene { cloud, body, r, accel })
    }

    pub fn dim(&self) -> usize {
        self.cloud.dim()
    }

    pub fn cloud(&self) -> &PointCloud {
        &self.cloud
    }

    pub fn body(&self) -> &ConvexBody {
        &self.body
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Same `A` and `K` at a different radius.
    pub fn with_radius(&self, r: f64) -> Result<Self> {
        Scene::new(self.cloud.clone(), self.body.clone(), r)
    }

    /// Smallest `t >= 0` with `x ∈ A + tK`, i.e. `min_a gauge(x − a)`.
    ///
    /// Callers guarantee `x.len() == self.dim()`.
    pub(crate) fn inclusion_radius_unchecked(&self, x: &[f64]) -> f64 {
        let pts = self.cloud.points();
        match &self.accel {
            Accel::Ball { inv_radius } => {
                let best = pts
                    .iter()
                    .map(|a| a.iter().zip(x).map(|(ai, xi)| (xi - ai) * (xi - ai)).sum::<f64>())
                    .fold(f64::INFINITY, f64::min);
                best.sqrt() * inv_radius
            }
            Accel::HPoly { shifted } => {
                let ConvexBody::HPolytope(p) = &self.body else { unreachable!() };
                let proj: Vec<f64> = p.scaled.chunks_exact(p.dim).map(|row| dot(row, x)).collect();
                shifted
                    .chunks_exact(proj.len())
                    .map(|sa| {
                        proj.iter().zip(sa).map(|(px, pa)| px - pa).fold(0.0, f64::max)
                    })
                    .fold(f64::INFINITY, f64::min)
            }
            Accel::VPoly => {
                let ConvexBody::VPolytope(p) = &self.body else { unreachable!() };
                let mut v = vec![0.0; x.len()];
                let mut best = f64::INFINITY;
                for a in pts {
                    for ((vi, xi), ai) in v.iter_mut().zip(x).zip(a.iter()) {
                        *vi = xi - ai;
                    }
                    // gauge(v) >= |v| / circumradius
                    if norm(&v) / p.circumradius >= best {
                        continue;
                    }
                    let g = p.gauge(&v).expect("validated vpolytope has a bounded polar");
                    best = best.min(g);
                }
                best
            }
        }
    }

    pub fn inclusion_radius(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.inclusion_radius_unchecked(x))
    }

    /// Whether `x ∈ A + rK`.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok(self.inclusion_radius(x)? <= self.r + GEOM_TOL)
    }

    /// Box containing `A + rK`.
    pub fn bounding_box(&self) -> BoundingBox {
        self.bounding_box_for_radius(self.r)
    }

    /// Box containing `A + (r + margin)K`; for the unit ball each side moves by `margin`.
    pub fn bounding_box_with_margin(&self, margin: f64) -> Result<BoundingBox> {
        if !(margin >= 0.0) {
            return Err(invalid(format!("margin must be nonnegative, got {margin}")));
        }
        Ok(self.bounding_box_for_radius(self.r + margin))
    }

    pub(crate) fn bounding_box_for_radius(&self, t: f64) -> BoundingBox {
        let d = self.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for a in self.cloud.points() {
            for i in 0..d {
                lo[i] = lo[i].min(a[i]);
                hi[i] = hi[i].max(a[i]);
            }
        }
        for i in 0..d {
            let [neg, pos] = self.body.axis_support(i);
            lo[i] -= t * neg;
            hi[i] += t * pos;
        }
        BoundingBox { lo, hi }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SceneDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
            message: e.to_string(),
            line: e.line(),
            column: e.column(),
        })?;
        doc.into_scene()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&SceneDoc::from_scene(self)).expect("scene serializes")
    }

    /// Short stable hash of the canonical JSON form.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let h = Sha256::digest(self.to_json().as_bytes());
        hex::encode(&h[..8])
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneDoc {
    dim: usize,
    points: Vec<Vec<f64>>,
    body: BodyDoc,
    r: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum BodyDoc {
    Ball { radius: f64 },
    Hpolytope { halfspaces: Vec<Halfspace> },
    Vpolytope { vertices: Vec<Vec<f64>> },
}

impl SceneDoc {
    fn into_scene(self) -> Result<Scene> {
        if self.dim == 0 {
            return Err(invalid("dim must be positive"));
        }
        let cloud = PointCloud::from_coords(self.points)?;
        check_dim(self.dim, cloud.dim())?;
        let body = match self.body {
            BodyDoc::Ball { radius } => ConvexBody::ball(radius)?,
            BodyDoc::Hpolytope { halfspaces } => ConvexBody::hpolytope(halfspaces)?,
            BodyDoc::Vpolytope { vertices } => ConvexBody::vpolytope(
                vertices.into_iter().map(Point::new).collect::<Result<_>>()?,
            )?,
        };
        Scene::new(cloud, body, self.r)
    }

    fn from_scene(s: &Scene) -> Self {
        let body = match &s.body {
            ConvexBody::Ball(b) => BodyDoc::Ball { radius: b.radius },
            ConvexBody::HPolytope(p) => BodyDoc::Hpolytope { halfspaces: p.halfspaces.clone() },
            ConvexBody::VPolytope(p) => BodyDoc::Vpolytope {
                vertices: p.vertices.iter().map(|v| v.0.clone()).collect(),
            },
        };
        SceneDoc {
            dim: s.dim(),
            points: s.cloud.points().iter().map(|p| p.0.clone()).collect(),
            body,
            r: s.r,
        }
    }
}

//! Geometric realisation of a quad-graph: positions S, Minkowski lift Q,
//! incenters and weights of tangential quads, Lorentz isometries of ℝ^{2,1}
//! and the triangulation construction of maximal s-embeddings.

mod io;
mod lorentz;
mod surface;
mod triangulate;

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Arc;

use nalgebra::Vector3;

use crate::quadgraph::{QuadGraph, RectLayout};
use crate::C64;

pub use io::{read_embedding, write_embedding, EmbeddingParseError};
pub use lorentz::{eta, minkowski_cross, minkowski_dot, LorentzError, LorentzMap};
pub use surface::{catenoid_sector, Domain, SurfaceError, SurfaceKind, SurfaceSpec};
pub use triangulate::{
    build_maximal_triangulation, build_triangulated_embedding, light_cone_apex, mesh_domain, MaximalTriangulation,
    Mesh, TriangulationBuildError,
};

/// Relative tolerance of the geometric identities (scaled by the local edge length).
pub const GEOM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbeddingError {
    #[error("monodromy error: quad {quad} violates the tangential condition by {defect:e}")]
    Monodromy { quad: usize, defect: f64 },
    #[error("corner {corner} violates the lift relation by {defect:e}")]
    Lift { corner: usize, defect: f64 },
    #[error("quad {0} is degenerate")]
    Degenerate(usize),
    #[error("incenter of quad {0} lies outside the quad")]
    CenterOutside(usize),
    #[error("quad {quad} is not tangential (equidistance residual {residual:e})")]
    NotTangential { quad: usize, residual: f64 },
    #[error("a vertex of quad {0} coincides with its incenter")]
    ZeroDistance(usize),
    #[error("quad {0} is folded or not convex")]
    Folded(usize),
    #[error("quads {0} and {1} overlap")]
    Overlap(usize, usize),
    #[error("expected {expected} vertex values, got {got}")]
    Size { expected: usize, got: usize },
    #[error("vertex {0} is not reachable from the base vertex")]
    Disconnected(usize),
}

fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

/// Incenter and inradius of a counterclockwise tangential quad.
///
/// The incenter is the intersection of the internal angle bisectors at the
/// first two vertices; equidistance to all four side lines is then verified.
pub fn incenter(v: [C64; 4]) -> Result<(C64, f64), QuadShapeError> {
    let scale = (0..4).map(|k| (v[(k + 1) % 4] - v[k]).norm()).fold(0.0, f64::max);
    for k in 0..4 {
        let e1 = v[(k + 1) % 4] - v[k];
        let e0 = v[k] - v[(k + 3) % 4];
        if e1.norm() <= f64::EPSILON * scale || cross(e0, e1).abs() <= 1e-14 * scale * scale {
            return Err(QuadShapeError::Degenerate);
        }
    }
    let bisector = |k: usize| {
        let a = v[(k + 1) % 4] - v[k];
        let b = v[(k + 3) % 4] - v[k];
        a / a.norm() + b / b.norm()
    };
    let (b0, b1) = (bisector(0), bisector(1));
    let den = cross(b0, b1);
    if den.abs() <= 1e-14 {
        return Err(QuadShapeError::Degenerate);
    }
    let t = cross(v[1] - v[0], b1) / den;
    let e = v[0] + b0 * t;
    let dist: Vec<f64> = (0..4)
        .map(|k| {
            let side = v[(k + 1) % 4] - v[k];
            cross(side, e - v[k]) / side.norm()
        })
        .collect();
    if dist.iter().any(|&d| d <= 0.0) {
        return Err(QuadShapeError::Outside);
    }
    let r = dist.iter().sum::<f64>() / 4.0;
    let residual = dist.iter().map(|d| (d - r).abs()).fold(0.0, f64::max);
    if residual > GEOM_TOL * scale {
        return Err(QuadShapeError::NotTangential(residual));
    }
    Ok((e, r))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadShapeError {
    Degenerate,
    Outside,
    NotTangential(f64),
}

/// Reading of the weight formula: tan θ_e equals the distance-product ratio
/// or its square root. The two agree whenever the ratio is 1, e.g. on the
/// square lattice; only the square root makes the exact observable
/// s-holomorphic on other quads.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WeightFormula {
    AsPrinted,
    #[default]
    SquareRoot,
}

impl std::fmt::Display for WeightFormula {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::AsPrinted => "as_printed",
            Self::SquareRoot => "square_root",
        })
    }
}

impl std::str::FromStr for WeightFormula {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "as_printed" => Ok(Self::AsPrinted),
            "square_root" => Ok(Self::SquareRoot),
            _ => Err(format!("unknown weight_formula {s:?} (expected as_printed or square_root)")),
        }
    }
}

/// `x = tan(θ/2)` with `tan θ = ratio`, θ ∈ [0, π/2].
pub fn weight_from_ratio(ratio: f64) -> f64 {
    if ratio.is_infinite() {
        1.0
    } else {
        ratio / (1.0 + (1.0 + ratio * ratio).sqrt())
    }
}

/// Opposite-side sum mismatch `(|v0•v0°| + |v1•v1°|) − (|v0°v1•| + |v1°v0•|)`.
pub fn tangential_defect(v: [C64; 4]) -> f64 {
    let side = |k: usize| (v[(k + 1) % 4] - v[k]).norm();
    side(0) + side(2) - side(1) - side(3)
}

fn perimeter(v: [C64; 4]) -> f64 {
    (0..4).map(|k| (v[(k + 1) % 4] - v[k]).norm()).sum()
}

/// Q determined by `Q(v•) − Q(v°) = |S(v•) − S(v°)|` and `Q(base) = 0`.
pub fn lift_q(graph: &QuadGraph, s: &[C64], base: usize) -> Result<Vec<f64>, EmbeddingError> {
    if s.len() != graph.n_vertices() {
        return Err(EmbeddingError::Size { expected: graph.n_vertices(), got: s.len() });
    }
    let mut worst: Option<(usize, f64)> = None;
    for (qi, quad) in graph.quads().iter().enumerate() {
        let v = quad.map(|x| s[x]);
        let d = tangential_defect(v).abs();
        if d > GEOM_TOL * perimeter(v) / 4.0 && worst.is_none_or(|w| d > w.1) {
            worst = Some((qi, d));
        }
    }
    if let Some((quad, defect)) = worst {
        return Err(EmbeddingError::Monodromy { quad, defect });
    }
    let mut q = vec![f64::NAN; graph.n_vertices()];
    q[base] = 0.0;
    let mut queue = VecDeque::from([base]);
    while let Some(v) = queue.pop_front() {
        for &c in &graph.fan(v).corners {
            let u = graph.corner_other(c, v);
            if q[u].is_nan() {
                let len = (s[graph.corner(c).primal] - s[graph.corner(c).dual]).norm();
                q[u] = if graph.is_primal(v) { q[v] - len } else { q[v] + len };
                queue.push_back(u);
            }
        }
    }
    if let Some(v) = q.iter().position(|x| x.is_nan()) {
        return Err(EmbeddingError::Disconnected(v));
    }
    Ok(q)
}

/// An s-embedding with its lift, incenters and weights. Immutable.
#[derive(Clone, Debug)]
pub struct SEmbedding {
    graph: Arc<QuadGraph>,
    s: Vec<C64>,
    q: Vec<f64>,
    centers: Vec<C64>,
    inradii: Vec<f64>,
    weights: Vec<f64>,
    /// tan θ_e as the distance-product ratio
    tan_theta: Vec<f64>,
    delta: f64,
}

impl SEmbedding {
    /// Validates the lift relation on every corner and computes incenters and weights.
    pub fn new(graph: Arc<QuadGraph>, s: Vec<C64>, q: Vec<f64>, delta: f64) -> Result<Self, EmbeddingError> {
        let n = graph.n_vertices();
        for len in [s.len(), q.len()] {
            if len != n {
                return Err(EmbeddingError::Size { expected: n, got: len });
            }
        }
        for (c, k) in graph.corners().iter().enumerate() {
            let len = (s[k.primal] - s[k.dual]).norm();
            let defect = (q[k.primal] - q[k.dual] - len).abs();
            if defect > GEOM_TOL * len.max(delta) {
                return Err(EmbeddingError::Lift { corner: c, defect });
            }
        }
        let mut centers = Vec::with_capacity(graph.quads().len());
        let mut inradii = Vec::with_capacity(graph.quads().len());
        let mut weights = Vec::with_capacity(graph.quads().len());
        let mut tan_theta = Vec::with_capacity(graph.quads().len());
        for (qi, quad) in graph.quads().iter().enumerate() {
            let v = quad.map(|x| s[x]);
            let (e, r) = incenter(v).map_err(|err| match err {
                QuadShapeError::Degenerate => EmbeddingError::Degenerate(qi),
                QuadShapeError::Outside => EmbeddingError::CenterOutside(qi),
                QuadShapeError::NotTangential(residual) => EmbeddingError::NotTangential { quad: qi, residual },
            })?;
            let d = v.map(|p| (p - e).norm());
            if d[1] * d[3] == 0.0 || d[0] * d[2] == 0.0 {
                return Err(EmbeddingError::ZeroDistance(qi));
            }
            centers.push(e);
            inradii.push(r);
            tan_theta.push(d[0] * d[2] / (d[1] * d[3]));
            weights.push(weight_from_ratio(d[0] * d[2] / (d[1] * d[3])));
        }
        Ok(Self { graph, s, q, centers, inradii, weights, tan_theta, delta })
    }

    /// Lifts `s` from `base` and builds the embedding.
    pub fn from_positions(graph: Arc<QuadGraph>, s: Vec<C64>, base: usize, delta: f64) -> Result<Self, EmbeddingError> {
        let q = lift_q(&graph, &s, base)?;
        Self::new(graph, s, q, delta)
    }

    /// Square lattice of mesh size `delta` with grid point `(i, j)` at `origin + δ(i + ij)`.
    pub fn flat_rect_lattice(width: usize, height: usize, delta: f64, origin: C64) -> Self {
        let graph = Arc::new(crate::quadgraph::build_rect_lattice(width, height));
        let lay = RectLayout::new(width, height);
        let s = lay.coords().iter().map(|&(i, j)| origin + C64::new(i as f64, j as f64) * delta).collect();
        Self::from_positions(graph, s, lay.n_primal(), delta).expect("square lattice is an s-embedding")
    }

    pub fn graph(&self) -> &QuadGraph {
        &self.graph
    }

    pub fn graph_arc(&self) -> &Arc<QuadGraph> {
        &self.graph
    }

    pub fn s(&self, v: usize) -> C64 {
        self.s[v]
    }

    pub fn q(&self, v: usize) -> f64 {
        self.q[v]
    }

    pub fn positions(&self) -> &[C64] {
        &self.s
    }

    pub fn lifts(&self) -> &[f64] {
        &self.q
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Lifted point (S, Q) ∈ ℝ^{2,1}.
    pub fn lifted(&self, v: usize) -> Vector3<f64> {
        Vector3::new(self.s[v].re, self.s[v].im, self.q[v])
    }

    /// Incenter S(e) of a quad.
    pub fn quad_center(&self, q: usize) -> C64 {
        self.centers[q]
    }

    pub fn inradius(&self, q: usize) -> f64 {
        self.inradii[q]
    }

    /// Weight x_e = tan(θ_e/2) of a quad.
    pub fn weight_from_geometry(&self, q: usize) -> f64 {
        self.weights[q]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Distance-product ratio `|v0•−e||v1•−e| / |v0°−e||v1°−e|` of a quad.
    pub fn distance_ratio(&self, q: usize) -> f64 {
        self.tan_theta[q]
    }

    /// Weights under the given reading of the distance-product ratio.
    pub fn weights_with(&self, formula: WeightFormula) -> Vec<f64> {
        match formula {
            WeightFormula::AsPrinted => self.weights.clone(),
            WeightFormula::SquareRoot => self.tan_theta.iter().map(|&r| weight_from_ratio(r.sqrt())).collect(),
        }
    }

    /// |S(c•) − S(c°)|.
    pub fn corner_length(&self, c: usize) -> f64 {
        let k = self.graph.corner(c);
        (self.s[k.primal] - self.s[k.dual]).norm()
    }

    /// Unit vector n(c) from the dual to the primal endpoint of a corner.
    pub fn n(&self, c: usize) -> C64 {
        let k = self.graph.corner(c);
        let z = self.s[k.primal] - self.s[k.dual];
        z / z.norm()
    }

    /// Same embedding with Q shifted so that `Q(base) = 0`.
    pub fn normalized_at(&self, base: usize) -> Self {
        let shift = self.q[base];
        let mut out = self.clone();
        out.q.iter_mut().for_each(|x| *x -= shift);
        out
    }

    /// Image of the lifted embedding under a Lorentz isometry.
    pub fn apply_isometry(&self, map: &LorentzMap) -> Result<Self, EmbeddingError> {
        let out = self.isometric_image(map)?;
        out.check_proper()?;
        Ok(out)
    }

    /// Like [`apply_isometry`](Self::apply_isometry) but without the
    /// properness check: projected quads may come out non-convex.
    pub fn isometric_image(&self, map: &LorentzMap) -> Result<Self, EmbeddingError> {
        let mut s = Vec::with_capacity(self.s.len());
        let mut q = Vec::with_capacity(self.s.len());
        for v in 0..self.s.len() {
            let p = map.apply(&self.lifted(v));
            s.push(C64::new(p.x, p.y));
            q.push(p.z);
        }
        Self::new(self.graph.clone(), s, q, self.delta)
    }

    /// Checks that every quad is convex and positively oriented and that no two
    /// quads overlap.
    pub fn check_proper(&self) -> Result<(), EmbeddingError> {
        let polys: Vec<[C64; 4]> = self.graph.quads().iter().map(|quad| quad.map(|x| self.s[x])).collect();
        for (qi, p) in polys.iter().enumerate() {
            for k in 0..4 {
                if cross(p[(k + 1) % 4] - p[k], p[(k + 2) % 4] - p[(k + 1) % 4]) <= 0.0 {
                    return Err(EmbeddingError::Folded(qi));
                }
            }
        }
        if let Some((a, b)) = find_overlap(&polys) {
            return Err(EmbeddingError::Overlap(a, b));
        }
        Ok(())
    }

    /// Measures the UNIF(δ) constants and lists violations for the given `c`.
    pub fn check_unif(&self, c: f64) -> UnifReport {
        let mut rep = UnifReport { passed: true, ..UnifReport::default() };
        let d = self.delta;
        let mut min_len = f64::INFINITY;
        let mut max_len: f64 = 0.0;
        for corner in 0..self.graph.corners().len() {
            let len = self.corner_length(corner);
            min_len = min_len.min(len);
            max_len = max_len.max(len);
            if len < d / c || len > c * d {
                rep.violations.push(UnifViolation::Length { corner, length: len });
            }
        }
        let mut min_angle = f64::INFINITY;
        for (qi, quad) in self.graph.quads().iter().enumerate() {
            for k in 0..4 {
                let v = self.s[quad[k]];
                let a = self.s[quad[(k + 1) % 4]] - v;
                let b = self.s[quad[(k + 3) % 4]] - v;
                let angle = (a.conj() * b).arg().abs();
                min_angle = min_angle.min(angle);
                if angle < 1.0 / c {
                    rep.violations.push(UnifViolation::Angle { quad: qi, vertex: quad[k], angle });
                }
            }
        }
        if min_len.is_finite() {
            rep.length_constant = (max_len / d).max(d / min_len);
        }
        if min_angle.is_finite() {
            rep.min_angle = min_angle;
            rep.angle_constant = 1.0 / min_angle;
        }
        rep.passed = rep.violations.is_empty();
        rep
    }

    /// Measures |Q − ϑ∘S| after fitting the additive constant of Q on the
    /// primal vertices.
    pub fn check_approx(&self, spec: &SurfaceSpec, c: f64) -> ApproxReport {
        let diff: Vec<f64> = (0..self.s.len()).map(|v| self.q[v] - spec.theta([self.s[v].re, self.s[v].im])).collect();
        let np = self.graph.n_primal();
        let fit: &[f64] = if np > 0 { &diff[..np] } else { &diff };
        let (lo, hi) = fit.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        let offset = if lo.is_finite() { (lo + hi) / 2.0 } else { 0.0 };
        let mut rep = ApproxReport { offset, ..ApproxReport::default() };
        for (v, &x) in diff.iter().enumerate() {
            let e = (x - offset).abs();
            if v < np {
                rep.max_primal_defect = rep.max_primal_defect.max(e);
            } else {
                rep.max_dual_defect = rep.max_dual_defect.max(e);
            }
            if e > rep.max_defect {
                rep.max_defect = e;
                rep.argmax = Some(v);
            }
        }
        rep.passed = rep.max_defect <= c * self.delta;
        rep
    }
}

fn find_overlap(polys: &[[C64; 4]]) -> Option<(usize, usize)> {
    if polys.is_empty() {
        return None;
    }
    let bbox = |p: &[C64; 4]| {
        let (mut lo, mut hi) = (p[0], p[0]);
        for z in p {
            lo = C64::new(lo.re.min(z.re), lo.im.min(z.im));
            hi = C64::new(hi.re.max(z.re), hi.im.max(z.im));
        }
        (lo, hi)
    };
    let boxes: Vec<_> = polys.iter().map(bbox).collect();
    let cell = boxes.iter().map(|(lo, hi)| (hi.re - lo.re).max(hi.im - lo.im)).fold(0.0, f64::max).max(1e-300);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let key = |x: f64| (x / cell).floor() as i64;
    let mut tested = HashSet::new();
    for (i, (lo, hi)) in boxes.iter().enumerate() {
        for gx in key(lo.re)..=key(hi.re) {
            for gy in key(lo.im)..=key(hi.im) {
                let bucket = grid.entry((gx, gy)).or_default();
                for &j in bucket.iter() {
                    if tested.insert((j, i)) && convex_overlap(&polys[i], &polys[j]) {
                        return Some((j, i));
                    }
                }
                bucket.push(i);
            }
        }
    }
    None
}

/// Separating-axis test for two convex counterclockwise quads; touching
/// along an edge or at a vertex is not an overlap.
fn convex_overlap(a: &[C64; 4], b: &[C64; 4]) -> bool {
    let scale = (a[2] - a[0]).norm().max((b[2] - b[0]).norm());
    let tol = 1e-9 * scale;
    for poly in [a, b] {
        for k in 0..4 {
            let edge = poly[(k + 1) % 4] - poly[k];
            let normal = C64::new(edge.im, -edge.re) / edge.norm();
            let proj = |p: &[C64; 4]| {
                p.iter()
                    .map(|z| z.re * normal.re + z.im * normal.im)
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(x), h.max(x)))
            };
            let (la, ha) = proj(a);
            let (lb, hb) = proj(b);
            if ha.min(hb) - la.max(lb) <= tol {
                return false;
            }
        }
    }
    true
}

#[derive(Clone, Debug, PartialEq)]
pub enum UnifViolation {
    Length { corner: usize, length: f64 },
    Angle { quad: usize, vertex: usize, angle: f64 },
}

/// Measured UNIF(δ) constants.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct UnifReport {
    pub passed: bool,
    /// max(max |corner| / δ, δ / min |corner|)
    pub length_constant: f64,
    pub min_angle: f64,
    pub angle_constant: f64,
    pub violations: Vec<UnifViolation>,
}

/// Measured Approx(ϑ, δ) defects.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ApproxReport {
    pub passed: bool,
    pub offset: f64,
    pub max_defect: f64,
    pub max_primal_defect: f64,
    pub max_dual_defect: f64,
    pub argmax: Option<usize>,
}


#[cfg(test)]
pub(crate) fn triangulate_test_circumcircle(v: [C64; 3]) -> (C64, f64) {
    let (b, c) = (v[1] - v[0], v[2] - v[0]);
    let d = 2.0 * cross(b, c);
    let u = C64::new(c.im * b.norm_sqr() - b.im * c.norm_sqr(), b.re * c.norm_sqr() - c.re * b.norm_sqr()) / d;
    (v[0] + u, u.norm())
}

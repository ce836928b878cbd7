use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::Vector3;

use super::lorentz::{minkowski_cross, minkowski_dot, LorentzMap};
use super::surface::{Domain, SurfaceKind, SurfaceSpec};
use super::{cross, EmbeddingError, SEmbedding};
use crate::quadgraph::{build_from_triangulation, TriangulatedGraph, TriangulationError};
use crate::C64;

/// A planar triangulation with counterclockwise triangles.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Mesh {
    pub points: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum TriangulationBuildError {
    #[error("lifted triangle {0} is not space-like")]
    NotSpacelike(usize),
    #[error("mesh size {0} too coarse for the domain")]
    TooCoarse(f64),
    #[error(transparent)]
    Graph(#[from] TriangulationError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

/// Apex of the past light cone through three lifted points, found by
/// boosting their plane to a horizontal one and taking the circumcenter there.
///
/// Returns `None` if the plane of the points is not space-like.
pub fn light_cone_apex(p: [Vector3<f64>; 3]) -> Option<Vector3<f64>> {
    let mut n = minkowski_cross(&(p[1] - p[0]), &(p[2] - p[0]));
    let nn = minkowski_dot(&n, &n);
    if nn >= 0.0 {
        return None;
    }
    n /= (-nn).sqrt();
    if n.z < 0.0 {
        n = -n;
    }
    let flatten = LorentzMap::boost(n.x / n.z, n.y / n.z).ok()?;
    let f = p.map(|x| flatten.apply(&(x - p[0])));
    let height = f[0].z;
    let (c, r) = circumcircle(f.map(|x| C64::new(x.x, x.y)))?;
    let apex = Vector3::new(c.re, c.im, height - r);
    Some(flatten.inverse().apply(&apex) + p[0])
}

fn circumcircle(v: [C64; 3]) -> Option<(C64, f64)> {
    let (b, c) = (v[1] - v[0], v[2] - v[0]);
    let d = 2.0 * cross(b, c);
    if d == 0.0 {
        return None;
    }
    let (b2, c2) = (b.norm_sqr(), c.norm_sqr());
    let u = C64::new(c.im * b2 - b.im * c2, b.re * c2 - c.re * b2) / d;
    Some((v[0] + u, u.norm()))
}

type RadialMap = Box<dyn Fn(f64) -> f64>;

/// Radial coordinate σ(r) making the induced metric of a rotationally
/// symmetric surface conformal to dσ² + dφ², and its inverse.
fn conformal_radius(kind: SurfaceKind) -> (RadialMap, RadialMap) {
    match kind {
        // dr²·r²/(r² + c²) + r²dφ² = r²(dσ² + dφ²) with σ = asinh(r/c)
        SurfaceKind::Catenoid { c } => (Box::new(move |r: f64| (r / c).asinh()), Box::new(move |u: f64| c * u.sinh())),
        _ => (Box::new(|r: f64| r.ln()), Box::new(|u: f64| u.exp())),
    }
}

/// Triangulates a strip between two rows of points, `lower` and `upper`,
/// both ordered so that the strip lies to the left of the lower row.
fn zipper(lower: &[usize], upper: &[usize], dist: &dyn Fn(usize, usize) -> f64, out: &mut Vec<[usize; 3]>) {
    let (mut i, mut j) = (0, 0);
    while i + 1 < lower.len() || j + 1 < upper.len() {
        let advance_lower = if i + 1 == lower.len() {
            false
        } else if j + 1 == upper.len() {
            true
        } else {
            dist(lower[i + 1], upper[j]) <= dist(lower[i], upper[j + 1])
        };
        if advance_lower {
            out.push([lower[i], lower[i + 1], upper[j]]);
            i += 1;
        } else {
            out.push([lower[i], upper[j + 1], upper[j]]);
            j += 1;
        }
    }
}

/// Near-equilateral triangulation of a domain at scale `delta`, isotropic for
/// the metric induced by `kind` on rotationally symmetric surfaces.
///
/// Alternate rows are shifted by half a step, so the sides transverse to the
/// rows are jagged at scale δ.
pub fn mesh_domain(domain: &Domain, kind: SurfaceKind, delta: f64) -> Mesh {
    let row_gap = delta * 3f64.sqrt() / 2.0;
    let mut mesh = Mesh::default();
    match *domain {
        Domain::Rect { x0, x1, y0, y1 } => {
            let rows = ((y1 - y0) / row_gap).floor() as usize;
            let gap = if rows > 0 { (y1 - y0) / rows as f64 } else { 0.0 };
            let cols = ((x1 - x0) / delta).round().max(1.0) as usize;
            let step = (x1 - x0) / cols as f64;
            let mut ids: Vec<Vec<usize>> = Vec::new();
            for j in 0..=rows {
                let y = y0 + j as f64 * gap;
                let shift = if j % 2 == 1 { 0.5 } else { 0.0 };
                let count = if j % 2 == 1 { cols } else { cols + 1 };
                let row = (0..count)
                    .map(|i| {
                        mesh.points.push([x0 + (i as f64 + shift) * step, y]);
                        mesh.points.len() - 1
                    })
                    .collect();
                ids.push(row);
            }
            let pts = mesh.points.clone();
            let dist = |a: usize, b: usize| (pts[a][0] - pts[b][0]).hypot(pts[a][1] - pts[b][1]);
            for j in 0..rows {
                zipper(&ids[j], &ids[j + 1], &dist, &mut mesh.triangles);
            }
        }
        Domain::AnnularSector { r0, r1, phi0, phi1 } => {
            // isosceles lattice in conformal coordinates (σ, φ): circumferential
            // edges have metric length δ at the mean radius, and rows are spaced
            // so that the apex angle α of each triangle satisfies
            // cos α = (1 + |∇ϑ|)/2, which keeps every light-cone apex on the
            // correct side of the circumferential edges
            let (to_sigma, to_r) = conformal_radius(kind);
            let (s0, s1) = (to_sigma(r0), to_sigma(r1));
            let step_target = delta / ((r0 + r1) / 2.0);
            let cols = ((phi1 - phi0) / step_target).round().max(1.0) as usize;
            let step = (phi1 - phi0) / cols as f64;
            let slope = |r: f64| match kind {
                SurfaceKind::Catenoid { c } => c / (r * r + c * c).sqrt(),
                _ => 0.0,
            };
            let mut cuts = vec![s0];
            let mut sig = s0;
            while sig < s1 {
                let alpha = ((1.0 + slope(to_r(sig))) / 2.0).acos();
                sig += step / (2.0 * (alpha / 2.0).tan());
                cuts.push(sig);
            }
            let last = *cuts.last().unwrap();
            let prev = cuts[cuts.len() - 2];
            // drop the overshooting row if that lands closer to s1
            if cuts.len() > 2 && (last - s1) > (s1 - prev) {
                cuts.pop();
            }
            let span = cuts.last().unwrap() - s0;
            let sigmas: Vec<f64> = cuts.iter().map(|x| s0 + (x - s0) * (s1 - s0) / span).collect();
            let rows = sigmas.len() - 1;
            let mut ids: Vec<Vec<usize>> = Vec::new();
            for (k, &sigma) in sigmas.iter().enumerate() {
                let r = to_r(sigma);
                let r = if k == 0 {
                    r0
                } else if k == rows {
                    r1
                } else {
                    r
                };
                let (shift, count) = if k % 2 == 1 { (0.5, cols) } else { (0.0, cols + 1) };
                let row = (0..count)
                    .map(|i| {
                        let phi = phi0 + (i as f64 + shift) * step;
                        mesh.points.push([r * phi.cos(), r * phi.sin()]);
                        mesh.points.len() - 1
                    })
                    .collect();
                ids.push(row);
            }
            // even rows start at φ0, odd rows half a step later; the outer row
            // of each strip is the lower one when walking towards increasing φ
            for (k, pair) in ids.windows(2).enumerate() {
                zipper_alternating(&pair[1], &pair[0], k % 2 == 1, &mut mesh.triangles);
            }
        }
    }
    mesh
}

/// Strip between rows whose points interleave; `lower_leads` tells whether
/// the lower row has the leading point.
fn zipper_alternating(lower: &[usize], upper: &[usize], lower_leads: bool, out: &mut Vec<[usize; 3]>) {
    let (mut i, mut j) = (0, 0);
    let mut take_lower = lower_leads;
    while i + 1 < lower.len() || j + 1 < upper.len() {
        let adv_lower = if i + 1 == lower.len() {
            false
        } else if j + 1 == upper.len() {
            true
        } else {
            take_lower
        };
        if adv_lower {
            out.push([lower[i], lower[i + 1], upper[j]]);
            i += 1;
        } else {
            out.push([lower[i], upper[j + 1], upper[j]]);
            j += 1;
        }
        take_lower = !take_lower;
    }
}

/// Maximal s-embedding on a surface together with its construction record.
#[derive(Clone, Debug)]
pub struct MaximalTriangulation {
    pub mesh: Mesh,
    pub tri: TriangulatedGraph,
    pub embedding: SEmbedding,
    /// Number of edge flips performed to make all kites proper.
    pub flips: usize,
    /// Largest distance of a flattened circumcenter outside its triangle, relative to its radius.
    pub max_center_exit: f64,
}

/// Meshes the surface's domain at scale `delta` and builds the s-embedding
/// whose primal vertices lie on the surface and whose dual vertices are the
/// light-cone apexes of the lifted triangles.
pub fn build_maximal_triangulation(
    spec: &SurfaceSpec,
    delta: f64,
) -> Result<MaximalTriangulation, TriangulationBuildError> {
    let mesh = mesh_domain(&spec.domain, spec.kind, delta);
    if mesh.triangles.len() < 2 {
        return Err(TriangulationBuildError::TooCoarse(delta));
    }
    let heights: Vec<f64> = mesh.points.iter().map(|&p| spec.theta(p)).collect();
    build_triangulated_embedding(mesh, &heights, delta)
}

/// s-embedding of a triangulation with prescribed lifts of its vertices.
///
/// Edges whose kites come out non-convex are flipped first.
pub fn build_triangulated_embedding(
    mut mesh: Mesh,
    heights: &[f64],
    delta: f64,
) -> Result<MaximalTriangulation, TriangulationBuildError> {
    let lift = |v: usize, m: &Mesh| Vector3::new(m.points[v][0], m.points[v][1], heights[v]);
    let apex_of = |t: [usize; 3], m: &Mesh| light_cone_apex(t.map(|v| lift(v, m)));
    let mut flips = 0;
    for _pass in 0..100 {
        let mut changed = false;
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in mesh.triangles.iter().enumerate() {
            for k in 0..3 {
                directed.insert((tri[k], tri[(k + 1) % 3]), t);
            }
        }
        let mut touched = vec![false; mesh.triangles.len()];
        let mut edges: Vec<_> = directed.iter().filter(|((u, w), _)| u < w).map(|(&e, &t)| (e, t)).collect();
        edges.sort();
        for ((u, w), t1) in edges {
            let Some(&t2) = directed.get(&(w, u)) else { continue };
            if touched[t1] || touched[t2] {
                continue;
            }
            let (a, b) = (mesh.triangles[t1], mesh.triangles[t2]);
            let (Some(d1), Some(d2)) = (apex_of(a, &mesh), apex_of(b, &mesh)) else { continue };
            let kite = [lift(u, &mesh), d2, lift(w, &mesh), d1].map(|p| C64::new(p.x, p.y));
            if is_convex(&kite) {
                continue;
            }
            let x = opposite(a, u, w);
            let y = opposite(b, w, u);
            let (p, pu, pw, px, py) = (&mesh.points, u, w, x, y);
            let z = |v: usize| C64::new(p[v][0], p[v][1]);
            // the flip is admissible if u, y, w, x is a convex quadrilateral
            // and the new kite is proper
            if !is_convex(&[z(pu), z(py), z(pw), z(px)]) {
                continue;
            }
            let (n1, n2) = ([x, u, y], [y, w, x]);
            let (Some(e1), Some(e2)) = (apex_of(n1, &mesh), apex_of(n2, &mesh)) else { continue };
            let new_kite = [lift(x, &mesh), e1, lift(y, &mesh), e2].map(|p| C64::new(p.x, p.y));
            if !is_convex(&new_kite) {
                continue;
            }
            mesh.triangles[t1] = [x, u, y];
            mesh.triangles[t2] = [y, w, x];
            touched[t1] = true;
            touched[t2] = true;
            flips += 1;
            changed = true;
        }
        if !changed {
            break;
        }
    }

    let positions: Vec<[f64; 2]> = mesh.points.clone();
    let tri = build_from_triangulation(&mesh.triangles, &positions)?;
    let g = &tri.graph;
    let mut s = vec![C64::new(0.0, 0.0); g.n_vertices()];
    let mut q = vec![0.0; g.n_vertices()];
    for (pv, &v) in tri.vertex_of_primal.iter().enumerate() {
        s[pv] = C64::new(mesh.points[v][0], mesh.points[v][1]);
        q[pv] = heights[v];
    }
    let mut max_center_exit: f64 = 0.0;
    for (k, &t) in tri.triangle_of_dual.iter().enumerate() {
        let corners = mesh.triangles[t];
        let d = apex_of(corners, &mesh).ok_or(TriangulationBuildError::NotSpacelike(t))?;
        s[g.n_primal() + k] = C64::new(d.x, d.y);
        q[g.n_primal() + k] = d.z;
        max_center_exit = max_center_exit.max(center_exit(corners.map(|v| lift(v, &mesh)), d));
    }
    let embedding = SEmbedding::new(Arc::new(tri.graph.clone()), s, q, delta)?;
    embedding.check_proper()?;
    Ok(MaximalTriangulation { mesh, tri, embedding, flips, max_center_exit })
}

fn opposite(t: [usize; 3], u: usize, w: usize) -> usize {
    *t.iter().find(|&&v| v != u && v != w).expect("triangle has three distinct vertices")
}

fn is_convex(p: &[C64; 4]) -> bool {
    (0..4).all(|k| cross(p[(k + 1) % 4] - p[k], p[(k + 2) % 4] - p[(k + 1) % 4]) > 0.0)
}

/// How far the apex projects outside its (projected) triangle, relative to the apex distance.
fn center_exit(p: [Vector3<f64>; 3], apex: Vector3<f64>) -> f64 {
    let z = p.map(|x| C64::new(x.x, x.y));
    let c = C64::new(apex.x, apex.y);
    let r = (z[0] - c).norm();
    (0..3)
        .map(|k| {
            let e = z[(k + 1) % 3] - z[k];
            -cross(e, c - z[k]) / e.norm() / r
        })
        .fold(0.0, f64::max)
}

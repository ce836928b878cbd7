//! Discrete differential calculus on an s-embedding: ∂̄_S and ∂_S from
//! vertices to quads, ∂̄_ω and ∂_ω from quads to vertices, the s-Laplacian
//! Δ_S = −4∂_ω∂̄_S, reconstruction of quad values from corner projections and
//! the discrete integral identity.

use std::fmt::Write as _;

use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::sembedding::SEmbedding;
use crate::C64;

/// Relative tolerance for an entry of Δ_S to count as real.
pub const REAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OpsError {
    #[error("quad {0} is degenerate: the normalisation of the difference quotient vanishes")]
    Degenerate(usize),
    #[error("vertex {0} has an incomplete fan")]
    BoundaryVertex(usize),
    #[error("Δ_S entry ({row}, {col}) has imaginary part {imag:e}")]
    NonReal { row: usize, col: usize, imag: f64 },
    #[error("all projection lines coincide")]
    IllPosed,
    #[error("field has {got} values, expected {expected}")]
    Size { expected: usize, got: usize },
}

/// Complex values on the vertices G• ∪ G°.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VertexField {
    pub values: Vec<C64>,
}

impl VertexField {
    pub fn new(values: Vec<C64>) -> Self {
        Self { values }
    }

    pub fn real(values: &[f64]) -> Self {
        Self { values: values.iter().map(|&x| C64::new(x, 0.0)).collect() }
    }

    pub fn constant(n: usize, value: C64) -> Self {
        Self { values: vec![value; n] }
    }

    pub fn conj(&self) -> Self {
        Self { values: self.values.iter().map(|z| z.conj()).collect() }
    }
}

/// Complex values on the quads ◇G.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuadField {
    pub values: Vec<C64>,
}

impl QuadField {
    pub fn new(values: Vec<C64>) -> Self {
        Self { values }
    }

    pub fn constant(n: usize, value: C64) -> Self {
        Self { values: vec![value; n] }
    }

    pub fn conj(&self) -> Self {
        Self { values: self.values.iter().map(|z| z.conj()).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

/// Values on corners together with the unit complex numbers τ(c) whose
/// inverse square root spans the line each value must lie on.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CornerField {
    pub values: Vec<C64>,
    pub lines: Vec<C64>,
}

impl CornerField {
    /// Attaches the lines τ(c)^{-1/2}ℝ of `embedding`, τ(c) = −i·n(c).
    pub fn new(embedding: &SEmbedding, values: Vec<C64>) -> Result<Self, OpsError> {
        let n = embedding.graph().corners().len();
        if values.len() != n {
            return Err(OpsError::Size { expected: n, got: values.len() });
        }
        Ok(Self { values, lines: (0..n).map(|c| tau(embedding, c)).collect() })
    }

    /// Largest distance from a value to its line.
    pub fn max_line_residual(&self) -> f64 {
        self.values.iter().zip(&self.lines).fold(0.0, |m, (&f, &t)| m.max((project(f, t) - f).norm()))
    }
}

/// Interface tangent at a corner: τ(c) = −i·n(c).
pub fn tau(embedding: &SEmbedding, c: usize) -> C64 {
    -C64::i() * embedding.n(c)
}

/// Projection of `w` onto the line τ^{-1/2}ℝ.
pub fn project(w: C64, tau: C64) -> C64 {
    let eta = tau.powf(-0.5);
    eta * (w * eta.conj()).re
}

/// Coefficients of ∂̄_S on quad `q`, in the vertex order of the quad.
pub fn dbar_coefficients(embedding: &SEmbedding, q: usize) -> Result<[C64; 4], OpsError> {
    let graph = embedding.graph();
    let quad = graph.quad(q);
    let z = embedding.quad_center(q);
    let mut inv = [C64::new(0.0, 0.0); 4];
    let mut norm = C64::new(0.0, 0.0);
    let mut scale: f64 = 0.0;
    for k in 0..4 {
        let v = quad[k];
        let d = embedding.s(v) - z;
        if d.norm() == 0.0 {
            return Err(OpsError::Degenerate(q));
        }
        let sign = if graph.is_primal(v) { 1.0 } else { -1.0 };
        inv[k] = sign / d;
        // Σ ±1/(S(v) − z) = 0 on a tangential quad, so centring at z changes
        // nothing but the cancellation
        norm += inv[k] * d.conj();
        scale = scale.max((embedding.s(v).conj() / d).norm());
    }
    if norm.norm() <= 1e-12 * scale.max(1.0) {
        return Err(OpsError::Degenerate(q));
    }
    let mu = 4.0 / norm;
    Ok(inv.map(|x| mu / 4.0 * x))
}

fn check_vertex_field(embedding: &SEmbedding, field: &VertexField) -> Result<(), OpsError> {
    let n = embedding.graph().n_vertices();
    if field.values.len() != n {
        return Err(OpsError::Size { expected: n, got: field.values.len() });
    }
    Ok(())
}

/// ∂̄_S I on every quad.
pub fn dbar_s(embedding: &SEmbedding, field: &VertexField) -> Result<QuadField, OpsError> {
    check_vertex_field(embedding, field)?;
    let graph = embedding.graph();
    let mut out = Vec::with_capacity(graph.quads().len());
    for q in 0..graph.quads().len() {
        let coef = dbar_coefficients(embedding, q)?;
        let quad = graph.quad(q);
        out.push((0..4).map(|k| coef[k] * field.values[quad[k]]).sum());
    }
    Ok(QuadField::new(out))
}

/// ∂_S I = conj(∂̄_S conj I).
pub fn d_s(embedding: &SEmbedding, field: &VertexField) -> Result<QuadField, OpsError> {
    Ok(dbar_s(embedding, &field.conj())?.conj())
}

/// ∂̄_ω K(v) = (1/2i) Σ_k K(z_k)(n(c_{k+1}) − n(c_k)) over the counterclockwise fan.
pub fn dbar_omega(embedding: &SEmbedding, field: &QuadField, v: usize) -> Result<C64, OpsError> {
    let graph = embedding.graph();
    if field.values.len() != graph.quads().len() {
        return Err(OpsError::Size { expected: graph.quads().len(), got: field.values.len() });
    }
    let fan = graph.fan(v);
    if !fan.complete {
        return Err(OpsError::BoundaryVertex(v));
    }
    let m = fan.quads.len();
    let mut sum = C64::new(0.0, 0.0);
    for k in 0..m {
        let dn = embedding.n(fan.corners[(k + 1) % m]) - embedding.n(fan.corners[k]);
        sum += field.values[fan.quads[k]] * dn;
    }
    Ok(sum / C64::new(0.0, 2.0))
}

/// ∂_ω K = conj(∂̄_ω conj K).
pub fn d_omega(embedding: &SEmbedding, field: &QuadField, v: usize) -> Result<C64, OpsError> {
    Ok(dbar_omega(embedding, &field.conj(), v)?.conj())
}

/// Which factorisation of the s-Laplacian to assemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factorization {
    /// −4 ∂_ω ∂̄_S
    DOmegaDbarS,
    /// −4 ∂̄_ω ∂_S
    DbarOmegaDS,
}

/// Δ_S restricted to rows at interior vertices.
#[derive(Clone, Debug)]
pub struct SLaplacian {
    n_vertices: usize,
    rows: Vec<usize>,
    stencils: Vec<Vec<(usize, f64)>>,
    max_imag: f64,
}

impl SLaplacian {
    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// Vertices carrying a row, in increasing order.
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    /// Neighbour/coefficient pairs of the row at `v`, sorted by neighbour.
    pub fn stencil(&self, v: usize) -> Option<&[(usize, f64)]> {
        self.rows.binary_search(&v).ok().map(|i| self.stencils[i].as_slice())
    }

    /// Entry (v, u), zero when absent.
    pub fn entry(&self, v: usize, u: usize) -> f64 {
        self.stencil(v).and_then(|s| s.binary_search_by_key(&u, |&(w, _)| w).ok().map(|i| s[i].1)).unwrap_or(0.0)
    }

    /// Largest imaginary part discarded during assembly.
    pub fn max_imag(&self) -> f64 {
        self.max_imag
    }

    /// n_vertices × n_vertices matrix whose non-interior rows are empty.
    pub fn matrix(&self) -> CsrMatrix<f64> {
        let mut coo = CooMatrix::new(self.n_vertices, self.n_vertices);
        for (&v, st) in self.rows.iter().zip(&self.stencils) {
            for &(u, x) in st {
                coo.push(v, u, x);
            }
        }
        CsrMatrix::from(&coo)
    }

    /// Block of Δ_S between interior vertices, indexed by position in `rows`.
    pub fn interior_block(&self) -> CsrMatrix<f64> {
        let k = self.rows.len();
        let mut coo = CooMatrix::new(k, k);
        for (i, st) in self.stencils.iter().enumerate() {
            for &(u, x) in st {
                if let Ok(j) = self.rows.binary_search(&u) {
                    coo.push(i, j, x);
                }
            }
        }
        CsrMatrix::from(&coo)
    }

    /// max |Δ_S(v,u) − Δ_S(u,v)| over interior pairs.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (&v, st) in self.rows.iter().zip(&self.stencils) {
            for &(u, x) in st {
                if self.rows.binary_search(&u).is_ok() {
                    worst = worst.max((x - self.entry(u, v)).abs());
                }
            }
        }
        worst
    }

    /// (Δ_S I)(v) for every row vertex.
    pub fn apply(&self, field: &[f64]) -> Vec<f64> {
        self.stencils.iter().map(|st| st.iter().map(|&(u, x)| x * field[u]).sum()).collect()
    }

    /// Coordinate text export, one "row col value" line per stored entry.
    pub fn to_coo_text(&self) -> String {
        let mut out = String::new();
        for (&v, st) in self.rows.iter().zip(&self.stencils) {
            for &(u, x) in st {
                let _ = writeln!(out, "{v} {u} {x:e}");
            }
        }
        out
    }
}

/// Assembles −4∂_ω∂̄_S at the given interior vertices.
pub fn assemble_s_laplacian(embedding: &SEmbedding, interior: &[usize]) -> Result<SLaplacian, OpsError> {
    assemble_with(embedding, interior, Factorization::DOmegaDbarS)
}

/// Assembles Δ_S at the given interior vertices through either factorisation.
pub fn assemble_with(embedding: &SEmbedding, interior: &[usize], route: Factorization) -> Result<SLaplacian, OpsError> {
    let graph = embedding.graph();
    let mut rows: Vec<usize> = interior.to_vec();
    rows.sort_unstable();
    rows.dedup();
    let mut coef_cache: Vec<Option<[C64; 4]>> = vec![None; graph.quads().len()];
    let mut stencils = Vec::with_capacity(rows.len());
    let mut max_imag: f64 = 0.0;
    for &v in &rows {
        let fan = graph.fan(v);
        if !fan.complete {
            return Err(OpsError::BoundaryVertex(v));
        }
        let m = fan.quads.len();
        let mut acc: Vec<(usize, C64)> = Vec::new();
        for k in 0..m {
            let q = fan.quads[k];
            let coef = match coef_cache[q] {
                Some(c) => c,
                None => {
                    let c = dbar_coefficients(embedding, q)?;
                    coef_cache[q] = Some(c);
                    c
                }
            };
            let dn = embedding.n(fan.corners[(k + 1) % m]) - embedding.n(fan.corners[k]);
            let quad = graph.quad(q);
            for j in 0..4 {
                // −4·(i/2)·D·conj(Δn)  or  −4·(1/2i)·conj(D)·Δn
                let x = match route {
                    Factorization::DOmegaDbarS => C64::new(0.0, -2.0) * coef[j] * dn.conj(),
                    Factorization::DbarOmegaDS => C64::new(0.0, 2.0) * coef[j].conj() * dn,
                };
                acc.push((quad[j], x));
            }
        }
        acc.sort_by_key(|&(u, _)| u);
        let mut st: Vec<(usize, C64)> = Vec::new();
        for (u, x) in acc {
            match st.last_mut() {
                Some(last) if last.0 == u => last.1 += x,
                _ => st.push((u, x)),
            }
        }
        let scale = st.iter().fold(1.0f64, |m, (_, x)| m.max(x.norm()));
        for &(u, x) in &st {
            max_imag = max_imag.max(x.im.abs());
            if x.im.abs() > REAL_TOL * scale {
                return Err(OpsError::NonReal { row: v, col: u, imag: x.im });
            }
        }
        stencils.push(st.into_iter().map(|(u, x)| (u, x.re)).collect());
    }
    Ok(SLaplacian { n_vertices: graph.n_vertices(), rows, stencils, max_imag })
}

/// Least-squares F(e) from the four corner values of a quad; the residual is
/// the largest distance between a corner value and the projection of F(e).
pub fn reconstruct_f_on_quad(values: [C64; 4], taus: [C64; 4]) -> Result<(C64, f64), OpsError> {
    // unknown F = x + iy; each corner gives Re(F·conj η) = Re(F_c·conj η)
    let mut a = [[0.0f64; 2]; 2];
    let mut rhs = [0.0f64; 2];
    for k in 0..4 {
        let eta = taus[k].powf(-0.5);
        let row = [eta.re, eta.im];
        let y = (values[k] * eta.conj()).re;
        for i in 0..2 {
            for j in 0..2 {
                a[i][j] += row[i] * row[j];
            }
            rhs[i] += row[i] * y;
        }
    }
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let tr = a[0][0] + a[1][1];
    if det.abs() <= 1e-12 * tr * tr {
        return Err(OpsError::IllPosed);
    }
    let f = C64::new((rhs[0] * a[1][1] - rhs[1] * a[0][1]) / det, (a[0][0] * rhs[1] - a[1][0] * rhs[0]) / det);
    let residual = (0..4).fold(0.0f64, |m, k| m.max((project(f, taus[k]) - values[k]).norm()));
    Ok((f, residual))
}

/// Reconstructs F(e) on every quad from a corner field.
pub fn reconstruct_quad_field(embedding: &SEmbedding, field: &CornerField) -> Result<(QuadField, f64), OpsError> {
    let graph = embedding.graph();
    let mut out = Vec::with_capacity(graph.quads().len());
    let mut worst: f64 = 0.0;
    for q in 0..graph.quads().len() {
        let cs = graph.quad_corners(q);
        let (f, r) = reconstruct_f_on_quad(cs.map(|c| field.values[c]), cs.map(|c| field.lines[c]))?;
        out.push(f);
        worst = worst.max(r);
    }
    Ok((QuadField::new(out), worst))
}

/// Largest defect of H(u) − H(w) = Im ½(F(e)²(S(u) − S(w)) + i|F(e)|²(Q(u) − Q(w)))
/// over the sides and diagonals of every quad.
pub fn check_discrete_integral(embedding: &SEmbedding, f: &QuadField, h: &VertexField) -> f64 {
    let graph = embedding.graph();
    let mut worst: f64 = 0.0;
    for (q, quad) in graph.quads().iter().enumerate() {
        let fe = f.values[q];
        for (i, j) in [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (1, 3)] {
            let (u, w) = (quad[i], quad[j]);
            let ds = embedding.s(u) - embedding.s(w);
            let dq = embedding.q(u) - embedding.q(w);
            let pred = (0.5 * (fe * fe * ds + C64::i() * fe.norm_sqr() * dq)).im;
            let dh = h.values[u] - h.values[w];
            worst = worst.max((dh.re - pred).abs()).max(dh.im.abs());
        }
    }
    worst
}

/// min over rows of (Δ_S H)(v); +∞ without rows.
pub fn check_s_positivity(laplacian: &SLaplacian, h: &VertexField) -> f64 {
    let re: Vec<f64> = h.values.iter().map(|z| z.re).collect();
    laplacian.apply(&re).into_iter().fold(f64::INFINITY, f64::min)
}

/// Empirical regularity constants on one ball.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularityReport {
    pub radius: f64,
    /// sup over the ball of |F(e)|·√r.
    pub sup_scaled: f64,
    /// Fitted exponent of the oscillation of |F(e)| against distance.
    pub holder_exponent: f64,
    pub samples: usize,
}

/// Sup-norm and Hölder diagnostics of F around `center` for each radius.
/// Quad values are reconstructed from the corner field; |F(e)| is used so the
/// branch of the square root does not matter.
pub fn measure_regularity(
    field: &CornerField,
    embedding: &SEmbedding,
    center: C64,
    radii: &[f64],
) -> Result<Vec<RegularityReport>, OpsError> {
    let (fe, _) = reconstruct_quad_field(embedding, field)?;
    let nq = embedding.graph().quads().len();
    let mut out = Vec::new();
    for &r in radii {
        let inside: Vec<usize> = (0..nq).filter(|&q| (embedding.quad_center(q) - center).norm() <= r).collect();
        let sup = inside.iter().fold(0.0f64, |m, &q| m.max(fe.values[q].norm()));
        // oscillation at dyadic scales r/2, r/4, r/8, r/16
        let scales: Vec<f64> = (1..=4).map(|j| r / f64::from(1 << j)).collect();
        let mut osc = vec![0.0f64; scales.len()];
        for (a, &p) in inside.iter().enumerate() {
            for &q in &inside[a + 1..] {
                let d = (embedding.quad_center(p) - embedding.quad_center(q)).norm();
                let diff = (fe.values[p].norm() - fe.values[q].norm()).abs();
                for (j, &s) in scales.iter().enumerate() {
                    if d <= s {
                        osc[j] = osc[j].max(diff);
                    }
                }
            }
        }
        let pts: Vec<(f64, f64)> =
            scales.iter().zip(&osc).filter(|(_, &o)| o > 0.0).map(|(&s, &o)| (s.ln(), o.ln())).collect();
        let holder = if pts.len() >= 2 {
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            sxy / sxx
        } else {
            0.0
        };
        out.push(RegularityReport {
            radius: r,
            sup_scaled: sup * r.sqrt(),
            holder_exponent: holder,
            samples: inside.len(),
        });
    }
    Ok(out)
}

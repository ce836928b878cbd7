//! Continuum side: the maximal-surface equation, the Laplace–Beltrami
//! operator of the induced metric g = I − ∇ϑ∇ϑᵀ, and a P1 finite-element
//! solver for the harmonic function h with boundary values 0 on the arc
//! (ab) and 1 on the arc (ba).

use nalgebra::{DMatrix, Matrix2, Matrix6, Vector2, Vector6};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};

use crate::ordering::reverse_cuthill_mckee;
use crate::sembedding::{Domain, SurfaceError, SurfaceKind, SurfaceSpec};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ContinuumError {
    #[error("surface is not space-like at ({x}, {y}): |∇ϑ| = {slope}")]
    NotSpaceLike { x: f64, y: f64, slope: f64 },
    #[error("invalid marked domain: {0}")]
    Marked(String),
    #[error("mesh size must be positive and finite, got {0}")]
    MeshSize(f64),
    #[error("stiffness matrix is singular: {0}")]
    Singular(String),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

fn slope_check(spec: &SurfaceSpec, p: [f64; 2]) -> Result<([f64; 2], f64), ContinuumError> {
    let v = spec.grad(p);
    let s2 = v[0] * v[0] + v[1] * v[1];
    if s2 >= 1.0 || !s2.is_finite() {
        return Err(ContinuumError::NotSpaceLike { x: p[0], y: p[1], slope: s2.sqrt() });
    }
    Ok((v, 1.0 - s2))
}

/// div(∇ϑ/√(1 − |∇ϑ|²)) at `p`.
pub fn maximal_residual(spec: &SurfaceSpec, p: [f64; 2]) -> Result<f64, ContinuumError> {
    let (v, w) = slope_check(spec, p)?;
    let h = spec.hess(p);
    let tr = h[0][0] + h[1][1];
    let vhv = v[0] * (h[0][0] * v[0] + h[0][1] * v[1]) + v[1] * (h[1][0] * v[0] + h[1][1] * v[1]);
    Ok(tr / w.sqrt() + vhv / w.powf(1.5))
}

/// Induced metric g = I − ∇ϑ∇ϑᵀ at `p`.
pub fn metric(spec: &SurfaceSpec, p: [f64; 2]) -> Result<Matrix2<f64>, ContinuumError> {
    let (v, _) = slope_check(spec, p)?;
    Ok(Matrix2::new(1.0 - v[0] * v[0], -v[0] * v[1], -v[0] * v[1], 1.0 - v[1] * v[1]))
}

/// Scalar field with first and second derivatives.
pub trait SmoothField {
    fn value(&self, p: [f64; 2]) -> f64;
    fn grad(&self, p: [f64; 2]) -> [f64; 2];
    fn hess(&self, p: [f64; 2]) -> [[f64; 2]; 2];
}

/// Derivatives of a closure by central differences with step `step`.
pub struct FiniteDifference<F> {
    pub f: F,
    pub step: f64,
}

impl<F: Fn([f64; 2]) -> f64> SmoothField for FiniteDifference<F> {
    fn value(&self, p: [f64; 2]) -> f64 {
        (self.f)(p)
    }

    fn grad(&self, p: [f64; 2]) -> [f64; 2] {
        let e = self.step;
        let f = &self.f;
        [
            (f([p[0] + e, p[1]]) - f([p[0] - e, p[1]])) / (2.0 * e),
            (f([p[0], p[1] + e]) - f([p[0], p[1] - e])) / (2.0 * e),
        ]
    }

    fn hess(&self, p: [f64; 2]) -> [[f64; 2]; 2] {
        let e = self.step;
        let f = &self.f;
        let c = f(p);
        let xx = (f([p[0] + e, p[1]]) - 2.0 * c + f([p[0] - e, p[1]])) / (e * e);
        let yy = (f([p[0], p[1] + e]) - 2.0 * c + f([p[0], p[1] - e])) / (e * e);
        let xy = (f([p[0] + e, p[1] + e]) - f([p[0] + e, p[1] - e]) - f([p[0] - e, p[1] + e])
            + f([p[0] - e, p[1] - e]))
            / (4.0 * e * e);
        [[xx, xy], [xy, yy]]
    }
}

/// (1/√|g|) ∂_i(√|g| g^{ij} ∂_j h) at `p`.
///
/// With g = I − vvᵀ, v = ∇ϑ, w = 1 − |v|²: |g| = w, g⁻¹ = I + vvᵀ/w and
/// ∂_i(√|g| g^{ij}) = v_j·M where M is the maximal residual, so the operator
/// is tr(g⁻¹ Hess h) + M (v·∇h)/√w.
pub fn laplace_beltrami(spec: &SurfaceSpec, h: &dyn SmoothField, p: [f64; 2]) -> Result<f64, ContinuumError> {
    let (v, w) = slope_check(spec, p)?;
    let m = maximal_residual(spec, p)?;
    let hh = h.hess(p);
    let gh = h.grad(p);
    let mut second = hh[0][0] + hh[1][1];
    for i in 0..2 {
        for j in 0..2 {
            second += v[i] * v[j] * hh[i][j] / w;
        }
    }
    Ok(second + m * (v[0] * gh[0] + v[1] * gh[1]) / w.sqrt())
}

/// Domain with two marked boundary points; h = 0 on the counterclockwise
/// arc from `a` to `b` and h = 1 on the arc from `b` to `a`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkedDomain {
    pub domain: Domain,
    pub a: [f64; 2],
    pub b: [f64; 2],
}

/// Closest point of the boundary of `domain` to `p`.
pub fn nearest_boundary_point(domain: &Domain, p: [f64; 2]) -> [f64; 2] {
    let closest = |cands: &[[f64; 2]]| {
        *cands
            .iter()
            .min_by(|u, v| (u[0] - p[0]).hypot(u[1] - p[1]).total_cmp(&(v[0] - p[0]).hypot(v[1] - p[1])))
            .unwrap()
    };
    match *domain {
        Domain::Rect { x0, x1, y0, y1 } => {
            let (cx, cy) = (p[0].clamp(x0, x1), p[1].clamp(y0, y1));
            closest(&[[x0, cy], [x1, cy], [cx, y0], [cx, y1]])
        }
        Domain::AnnularSector { r0, r1, phi0, phi1 } => {
            let phi = p[1].atan2(p[0]).clamp(phi0, phi1);
            let ray = |t: f64| {
                let (c, s) = (t.cos(), t.sin());
                let along = (p[0] * c + p[1] * s).clamp(r0, r1);
                [along * c, along * s]
            };
            closest(&[[r0 * phi.cos(), r0 * phi.sin()], [r1 * phi.cos(), r1 * phi.sin()], ray(phi0), ray(phi1)])
        }
    }
}

/// Distance from `p` to the boundary of `domain`.
pub fn boundary_distance(domain: &Domain, p: [f64; 2]) -> f64 {
    let q = nearest_boundary_point(domain, p);
    (q[0] - p[0]).hypot(q[1] - p[1])
}

impl MarkedDomain {
    pub fn new(domain: Domain, a: [f64; 2], b: [f64; 2]) -> Result<Self, ContinuumError> {
        let diam = match domain {
            Domain::Rect { x0, x1, y0, y1 } => (x1 - x0).hypot(y1 - y0),
            Domain::AnnularSector { r1, .. } => 2.0 * r1,
        };
        for (name, p) in [("a", a), ("b", b)] {
            if boundary_distance(&domain, p) > 1e-9 * diam {
                return Err(ContinuumError::Marked(format!("{name} = {p:?} is not on the boundary")));
            }
        }
        if (a[0] - b[0]).hypot(a[1] - b[1]) <= 1e-12 * diam {
            return Err(ContinuumError::Marked("a and b coincide".into()));
        }
        Ok(Self { domain, a, b })
    }

    /// Unit square with a at the bottom midpoint and b at the top midpoint:
    /// h = 0 on the right half of the boundary and 1 on the left half.
    pub fn symmetric_square() -> Self {
        Self { domain: Domain::unit_square(), a: [0.5, 0.0], b: [0.5, 1.0] }
    }
}

/// Triangle mesh with its counterclockwise boundary node cycle.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FemMesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<usize>,
    /// cell counts of the structured grid
    pub cells: (usize, usize),
}

impl FemMesh {
    /// Structured mesh of `domain`: a grid in the natural parameters
    /// (x, y) or (r, φ) whose cells are split into four triangles around
    /// their centre.
    pub fn structured(domain: &Domain, mesh_size: f64) -> Result<Self, ContinuumError> {
        if !(mesh_size > 0.0 && mesh_size.is_finite()) {
            return Err(ContinuumError::MeshSize(mesh_size));
        }
        let (lx, ly) = match *domain {
            Domain::Rect { x0, x1, y0, y1 } => (x1 - x0, y1 - y0),
            Domain::AnnularSector { r0, r1, phi0, phi1 } => (r1 - r0, (phi1 - phi0) * (r0 + r1) / 2.0),
        };
        let nx = (lx / mesh_size).round().max(1.0) as usize;
        let ny = (ly / mesh_size).round().max(1.0) as usize;
        Ok(Self::with_counts(domain, nx, ny))
    }

    /// Structured mesh with `nx × ny` cells.
    pub fn with_counts(domain: &Domain, nx: usize, ny: usize) -> Self {
        let (nx, ny) = (nx.max(1), ny.max(1));
        let map = |s: f64, t: f64| -> [f64; 2] {
            match *domain {
                Domain::Rect { x0, x1, y0, y1 } => [x0 + s * (x1 - x0), y0 + t * (y1 - y0)],
                Domain::AnnularSector { r0, r1, phi0, phi1 } => {
                    let (r, phi) = (r0 + s * (r1 - r0), phi0 + t * (phi1 - phi0));
                    [r * phi.cos(), r * phi.sin()]
                }
            }
        };
        let grid = |i: usize, j: usize| j * (nx + 1) + i;
        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1) + nx * ny);
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push(map(i as f64 / nx as f64, j as f64 / ny as f64));
            }
        }
        let mut triangles = Vec::with_capacity(4 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let c = nodes.len();
                nodes.push(map((i as f64 + 0.5) / nx as f64, (j as f64 + 0.5) / ny as f64));
                let (p00, p10, p11, p01) = (grid(i, j), grid(i + 1, j), grid(i + 1, j + 1), grid(i, j + 1));
                triangles.extend([[p00, p10, c], [p10, p11, c], [p11, p01, c], [p01, p00, c]]);
            }
        }
        let mut boundary = Vec::with_capacity(2 * (nx + ny));
        boundary.extend((0..nx).map(|i| grid(i, 0)));
        boundary.extend((0..ny).map(|j| grid(nx, j)));
        boundary.extend((1..=nx).rev().map(|i| grid(i, ny)));
        boundary.extend((1..=ny).rev().map(|j| grid(0, j)));
        Self { nodes, triangles, boundary, cells: (nx, ny) }
    }

    /// Image of the mesh under a linear map of the plane.
    pub fn mapped(&self, a: &Matrix2<f64>) -> Self {
        let nodes = self
            .nodes
            .iter()
            .map(|p| {
                let q = a * Vector2::new(p[0], p[1]);
                [q.x, q.y]
            })
            .collect();
        Self { nodes, triangles: self.triangles.clone(), boundary: self.boundary.clone(), cells: self.cells }
    }

    fn gradients(&self, t: usize) -> (f64, [Vector2<f64>; 3]) {
        let [i, j, k] = self.triangles[t];
        let (p, q, r) = (self.nodes[i], self.nodes[j], self.nodes[k]);
        let det = (q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]);
        let g = [
            Vector2::new(q[1] - r[1], r[0] - q[0]) / det,
            Vector2::new(r[1] - p[1], p[0] - r[0]) / det,
            Vector2::new(p[1] - q[1], q[0] - p[0]) / det,
        ];
        (det / 2.0, g)
    }

    /// Barycentric coordinates of `p` in triangle `t`.
    fn barycentric(&self, t: usize, p: [f64; 2]) -> [f64; 3] {
        let [i, j, k] = self.triangles[t];
        let (a, b, c) = (self.nodes[i], self.nodes[j], self.nodes[k]);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }
}

/// Boundary data actually imposed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundaryRecord {
    /// (node, value) for every boundary node
    pub values: Vec<(usize, f64)>,
    pub node_a: usize,
    pub node_b: usize,
    /// largest distance from a marked point to its snapped node
    pub snap_distance: f64,
}

/// Piecewise-linear solution of Δ^Σ h = 0.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FemSolution {
    pub mesh: FemMesh,
    pub values: Vec<f64>,
    pub boundary: BoundaryRecord,
}

impl FemSolution {
    /// Linear interpolation at `p`; `None` outside the mesh.
    pub fn interpolate(&self, p: [f64; 2]) -> Option<f64> {
        let tol = -1e-12;
        for (t, tri) in self.mesh.triangles.iter().enumerate() {
            let l = self.mesh.barycentric(t, p);
            if l.iter().all(|&x| x >= tol) {
                return Some((0..3).map(|k| l[k] * self.values[tri[k]]).sum());
            }
        }
        None
    }

    /// Quadratic least-squares fit of the nodal values within `radius` of `p`,
    /// as a smooth field (value, gradient and Hessian of the fit at any point).
    pub fn local_quadratic(&self, p: [f64; 2], radius: f64) -> Option<QuadraticFit> {
        let mut ata = Matrix6::<f64>::zeros();
        let mut atb = Vector6::<f64>::zeros();
        let mut count = 0;
        for (n, q) in self.mesh.nodes.iter().enumerate() {
            let (dx, dy) = ((q[0] - p[0]) / radius, (q[1] - p[1]) / radius);
            if dx * dx + dy * dy > 1.0 {
                continue;
            }
            let row = Vector6::new(1.0, dx, dy, dx * dx, dx * dy, dy * dy);
            ata += row * row.transpose();
            atb += row * self.values[n];
            count += 1;
        }
        if count < 6 {
            return None;
        }
        let c = ata.lu().solve(&atb)?;
        Some(QuadraticFit { center: p, scale: radius, coef: [c[0], c[1], c[2], c[3], c[4], c[5]] })
    }

    /// Rows `node_id, x, y, h`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node_id,x,y,h\n");
        for (n, (p, h)) in self.mesh.nodes.iter().zip(&self.values).enumerate() {
            out.push_str(&format!("{n},{},{},{}\n", p[0], p[1], h));
        }
        out
    }
}

/// c₀ + c₁X + c₂Y + c₃X² + c₄XY + c₅Y² in X = (x − x₀)/s, Y = (y − y₀)/s.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticFit {
    pub center: [f64; 2],
    pub scale: f64,
    pub coef: [f64; 6],
}

impl SmoothField for QuadraticFit {
    fn value(&self, p: [f64; 2]) -> f64 {
        let (x, y) = ((p[0] - self.center[0]) / self.scale, (p[1] - self.center[1]) / self.scale);
        let c = &self.coef;
        c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y
    }

    fn grad(&self, p: [f64; 2]) -> [f64; 2] {
        let (x, y) = ((p[0] - self.center[0]) / self.scale, (p[1] - self.center[1]) / self.scale);
        let c = &self.coef;
        [(c[1] + 2.0 * c[3] * x + c[4] * y) / self.scale, (c[2] + c[4] * x + 2.0 * c[5] * y) / self.scale]
    }

    fn hess(&self, _: [f64; 2]) -> [[f64; 2]; 2] {
        let (c, s2) = (&self.coef, self.scale * self.scale);
        [[2.0 * c[3] / s2, c[4] / s2], [c[4] / s2, 2.0 * c[5] / s2]]
    }
}

/// Per-node 0/1 data along the boundary cycle with a and b snapped to the
/// nearest boundary nodes, which get the value ½.
fn boundary_data(mesh: &FemMesh, a: [f64; 2], b: [f64; 2]) -> Result<BoundaryRecord, ContinuumError> {
    let nearest = |p: [f64; 2]| {
        mesh.boundary
            .iter()
            .enumerate()
            .map(|(k, &n)| (k, (mesh.nodes[n][0] - p[0]).hypot(mesh.nodes[n][1] - p[1])))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap()
    };
    let (ka, da) = nearest(a);
    let (kb, db) = nearest(b);
    if ka == kb {
        return Err(ContinuumError::Marked("a and b snap to the same node; refine the mesh".into()));
    }
    let m = mesh.boundary.len();
    let mut values = Vec::with_capacity(m);
    for k in 0..m {
        let from_a = (k + m - ka) % m;
        let to_b = (kb + m - ka) % m;
        let v = if k == ka || k == kb {
            0.5
        } else if from_a < to_b {
            0.0
        } else {
            1.0
        };
        values.push((mesh.boundary[k], v));
    }
    Ok(BoundaryRecord { values, node_a: mesh.boundary[ka], node_b: mesh.boundary[kb], snap_distance: da.max(db) })
}

/// Galerkin solve on a given mesh with a per-element metric.
fn solve_on_mesh(
    mesh: FemMesh,
    boundary: BoundaryRecord,
    metric_at: impl Fn([f64; 2]) -> Result<Matrix2<f64>, ContinuumError>,
) -> Result<FemSolution, ContinuumError> {
    let n = mesh.nodes.len();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    for &(v, x) in &boundary.values {
        fixed[v] = Some(x);
    }
    let mut adj = vec![Vec::new(); n];
    for tri in &mesh.triangles {
        for a in 0..3 {
            adj[tri[a]].push(tri[(a + 1) % 3]);
            adj[tri[(a + 1) % 3]].push(tri[a]);
        }
    }
    let mut index = vec![usize::MAX; n];
    let mut free = Vec::new();
    for v in reverse_cuthill_mckee(&adj) {
        if fixed[v].is_none() {
            index[v] = free.len();
            free.push(v);
        }
    }
    let m = free.len();
    let mut coo = CooMatrix::new(m, m);
    let mut rhs = DMatrix::<f64>::zeros(m, 1);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let [i, j, k] = *tri;
        let bary = [
            (mesh.nodes[i][0] + mesh.nodes[j][0] + mesh.nodes[k][0]) / 3.0,
            (mesh.nodes[i][1] + mesh.nodes[j][1] + mesh.nodes[k][1]) / 3.0,
        ];
        let g = metric_at(bary)?;
        let ginv = g.try_inverse().ok_or_else(|| ContinuumError::Singular(format!("metric at element {t}")))?;
        let (area, grads) = mesh.gradients(t);
        if area <= 0.0 {
            return Err(ContinuumError::Singular(format!("element {t} has non-positive area")));
        }
        let factor = area * g.determinant().sqrt();
        for a in 0..3 {
            let va = tri[a];
            if fixed[va].is_some() {
                continue;
            }
            for b in 0..3 {
                let kab = factor * (grads[a].transpose() * ginv * grads[b])[(0, 0)];
                let vb = tri[b];
                match fixed[vb] {
                    Some(x) => rhs[(index[va], 0)] -= kab * x,
                    None => coo.push(index[va], index[vb], kab),
                }
            }
        }
    }
    let mut values: Vec<f64> = fixed.iter().map(|x| x.unwrap_or(0.0)).collect();
    if m > 0 {
        let csc = CscMatrix::from(&coo);
        let chol = CscCholesky::factor(&csc).map_err(|e| ContinuumError::Singular(format!("{e:?}")))?;
        let sol = chol.solve(&rhs);
        for (i, &v) in free.iter().enumerate() {
            values[v] = sol[(i, 0)];
        }
    }
    Ok(FemSolution { mesh, values, boundary })
}

/// P1 finite-element solution of Δ^Σ h = 0 with h = 0 on (ab), 1 on (ba).
pub fn solve_h(spec: &SurfaceSpec, domain: &MarkedDomain, mesh_size: f64) -> Result<FemSolution, ContinuumError> {
    solve_on(spec, domain, FemMesh::structured(&domain.domain, mesh_size)?)
}

/// Same as [`solve_h`] on a given mesh of the domain.
pub fn solve_on(spec: &SurfaceSpec, domain: &MarkedDomain, mesh: FemMesh) -> Result<FemSolution, ContinuumError> {
    let boundary = boundary_data(&mesh, domain.a, domain.b)?;
    solve_on_mesh(mesh, boundary, |p| metric(spec, p))
}

/// Solves with the constant metric of the tilted plane ϑ = ax + by and on the
/// flat plane over the image of the mesh under g^{1/2}; returns the largest
/// nodal difference.
pub fn boost_equivalence_check(a: f64, b: f64, domain: &MarkedDomain, mesh_size: f64) -> Result<f64, ContinuumError> {
    let spec = SurfaceSpec::new(SurfaceKind::Tilted { a, b }, domain.domain)?;
    let tilted = solve_h(&spec, domain, mesh_size)?;
    let g = metric(&spec, [0.0, 0.0])?;
    let eig = g.symmetric_eigen();
    let root =
        eig.eigenvectors * Matrix2::from_diagonal(&eig.eigenvalues.map(f64::sqrt)) * eig.eigenvectors.transpose();
    let mesh = tilted.mesh.mapped(&root);
    let flat = solve_on_mesh(mesh, tilted.boundary.clone(), |_| Ok(Matrix2::identity()))?;
    Ok(tilted.values.iter().zip(&flat.values).fold(0.0, |m, (x, y)| m.max((x - y).abs())))
}

/// Successive differences of probe values over nested meshes h, h/2, h/4 and
/// the observed order log₂(d₁/d₂) per probe.
#[derive(Clone, Debug, PartialEq)]
pub struct SelfConvergence {
    pub mesh_sizes: [f64; 3],
    pub probes: Vec<[f64; 2]>,
    pub differences: Vec<[f64; 2]>,
    pub orders: Vec<f64>,
}

pub fn self_convergence(
    spec: &SurfaceSpec,
    domain: &MarkedDomain,
    mesh_size: f64,
    probes: &[[f64; 2]],
) -> Result<SelfConvergence, ContinuumError> {
    let sizes = [mesh_size, mesh_size / 2.0, mesh_size / 4.0];
    let (nx, ny) = FemMesh::structured(&domain.domain, mesh_size)?.cells;
    let sols = [1, 2, 4]
        .into_iter()
        .map(|k| solve_on(spec, domain, FemMesh::with_counts(&domain.domain, k * nx, k * ny)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut differences = Vec::new();
    let mut orders = Vec::new();
    for &p in probes {
        let v: Vec<f64> = sols.iter().map(|s| s.interpolate(p).unwrap_or(f64::NAN)).collect();
        let d = [(v[0] - v[1]).abs(), (v[1] - v[2]).abs()];
        orders.push((d[0] / d[1]).log2());
        differences.push(d);
    }
    Ok(SelfConvergence { mesh_sizes: sizes, probes: probes.to_vec(), differences, orders })
}

#[cfg(test)]
mod tests;

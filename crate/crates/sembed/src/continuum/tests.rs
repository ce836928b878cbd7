use super::*;
use crate::sembedding::catenoid_sector;
use nalgebra::DVector;
use proptest::prelude::*;
use std::f64::consts::PI;

fn fd<F: Fn([f64; 2]) -> f64>(f: F) -> FiniteDifference<F> {
    FiniteDifference { f, step: 1e-4 }
}

/// div(A ∇h) with A = √|g| g⁻¹ by nested central differences.
fn lb_divergence(spec: &SurfaceSpec, h: &dyn Fn([f64; 2]) -> f64, p: [f64; 2]) -> f64 {
    let e = 1e-4;
    let flux = |q: [f64; 2]| {
        let g = spec.metric(q);
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        let inv = [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]];
        let gh = [
            (h([q[0] + e, q[1]]) - h([q[0] - e, q[1]])) / (2.0 * e),
            (h([q[0], q[1] + e]) - h([q[0], q[1] - e])) / (2.0 * e),
        ];
        let s = det.sqrt();
        [s * (inv[0][0] * gh[0] + inv[0][1] * gh[1]), s * (inv[1][0] * gh[0] + inv[1][1] * gh[1])]
    };
    let g = spec.metric(p);
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let d = 1e-3;
    let dx = (flux([p[0] + d, p[1]])[0] - flux([p[0] - d, p[1]])[0]) / (2.0 * d);
    let dy = (flux([p[0], p[1] + d])[1] - flux([p[0], p[1] - d])[1]) / (2.0 * d);
    (dx + dy) / det.sqrt()
}

#[test]
fn catenoid_is_maximal() {
    let s = catenoid_sector(1.0);
    for p in s.domain.sample(25) {
        assert!(maximal_residual(&s, p).unwrap().abs() < 1e-12);
    }
}

#[test]
fn planes_are_maximal() {
    assert!(SurfaceSpec::new(SurfaceKind::Catenoid { c: 1.0 }, Domain::unit_square()).is_err());
    let spec = SurfaceSpec::new(SurfaceKind::Tilted { a: 0.3, b: 0.1 }, Domain::unit_square()).unwrap();
    assert_eq!(maximal_residual(&spec, [0.2, 0.3]).unwrap(), 0.0);
}

#[test]
fn steep_point_is_rejected() {
    let s = SurfaceSpec { kind: SurfaceKind::Tilted { a: 0.8, b: 0.8 }, domain: Domain::unit_square() };
    assert!(matches!(maximal_residual(&s, [0.5, 0.5]), Err(ContinuumError::NotSpaceLike { .. })));
    let h = fd(|p: [f64; 2]| p[0]);
    assert!(laplace_beltrami(&s, &h, [0.5, 0.5]).is_err());
}

#[test]
fn flat_laplacian() {
    let s = SurfaceSpec::flat(Domain::unit_square());
    let h1 = fd(|p: [f64; 2]| p[0] * p[0] - p[1] * p[1]);
    let h2 = fd(|p: [f64; 2]| p[0] * p[0]);
    for p in s.domain.sample(9) {
        assert!(laplace_beltrami(&s, &h1, p).unwrap().abs() < 1e-6);
        assert!((laplace_beltrami(&s, &h2, p).unwrap() - 2.0).abs() < 1e-6);
    }
}

#[test]
fn closed_form_matches_divergence_form() {
    let fields: [fn([f64; 2]) -> f64; 3] =
        [|p| p[0] * p[1], |p| (p[0] + 2.0 * p[1]).sin(), |p| p[0].powi(3) - p[1] * p[1] * p[0]];
    let specs = [
        catenoid_sector(1.0),
        catenoid_sector(0.4),
        SurfaceSpec::new(SurfaceKind::Tilted { a: 0.5, b: -0.3 }, Domain::unit_square()).unwrap(),
    ];
    for s in &specs {
        for p in s.domain.sample(9) {
            for f in fields {
                let closed = laplace_beltrami(s, &fd(f), p).unwrap();
                let div = lb_divergence(s, &f, p);
                assert!((closed - div).abs() < 1e-4 * (1.0 + div.abs()), "{closed} vs {div} at {p:?}");
            }
        }
    }
}

#[test]
fn tilted_plane_laplacian_is_boosted_flat_laplacian() {
    // on ϑ = a x, isometric coordinates are (x√(1 − a²), y); h = X² − Y² is harmonic
    let a: f64 = 0.6;
    let s = SurfaceSpec::new(SurfaceKind::Tilted { a, b: 0.0 }, Domain::unit_square()).unwrap();
    let k = (1.0 - a * a).sqrt();
    let h = fd(move |p: [f64; 2]| (k * p[0]).powi(2) - p[1] * p[1]);
    assert!(laplace_beltrami(&s, &h, [0.3, 0.6]).unwrap().abs() < 1e-6);
}

#[test]
fn structured_mesh_shape() {
    let m = FemMesh::structured(&Domain::unit_square(), 0.25).unwrap();
    assert_eq!(m.nodes.len(), 25 + 16);
    assert_eq!(m.triangles.len(), 64);
    assert_eq!(m.boundary.len(), 16);
    // counterclockwise boundary and positive elements
    let mut area = 0.0;
    for k in 0..m.boundary.len() {
        let (p, q) = (m.nodes[m.boundary[k]], m.nodes[m.boundary[(k + 1) % m.boundary.len()]]);
        area += p[0] * q[1] - q[0] * p[1];
    }
    assert!((area / 2.0 - 1.0).abs() < 1e-12);
    let total: f64 = (0..m.triangles.len()).map(|t| m.gradients(t).0).sum();
    assert!((total - 1.0).abs() < 1e-12);
    let sector = Domain::AnnularSector { r0: 0.5, r1: 1.5, phi0: 0.0, phi1: PI / 2.0 };
    let m = FemMesh::structured(&sector, 0.1).unwrap();
    assert!((0..m.triangles.len()).all(|t| m.gradients(t).0 > 0.0));
    assert!(FemMesh::structured(&sector, 0.0).is_err());
}

#[test]
fn marked_points_must_be_on_the_boundary() {
    assert!(MarkedDomain::new(Domain::unit_square(), [0.5, 0.5], [0.5, 1.0]).is_err());
    assert!(MarkedDomain::new(Domain::unit_square(), [0.5, 0.0], [0.5, 0.0]).is_err());
    let sector = Domain::AnnularSector { r0: 0.5, r1: 1.5, phi0: 0.0, phi1: PI / 2.0 };
    let t = PI / 4.0;
    assert!(MarkedDomain::new(sector, [1.5 * t.cos(), 1.5 * t.sin()], [0.5 * t.cos(), 0.5 * t.sin()]).is_ok());
    assert!(MarkedDomain::new(sector, [1.0, 0.0], [0.0, 1.0]).is_ok());
}

#[test]
fn symmetric_square_centre_is_one_half() {
    let d = MarkedDomain::symmetric_square();
    let sol = solve_h(&SurfaceSpec::flat(d.domain), &d, 1.0 / 32.0).unwrap();
    let c = sol.interpolate([0.5, 0.5]).unwrap();
    assert!((c - 0.5).abs() < 1e-3, "{c}");
    assert_eq!(sol.boundary.snap_distance, 0.0);
    assert!(sol.values.iter().all(|&h| (0.0..=1.0).contains(&h)));
    // h = 0 on the right side, 1 on the left side
    assert!(sol.interpolate([0.9, 0.5]).unwrap() < 0.2);
    assert!(sol.interpolate([0.1, 0.5]).unwrap() > 0.8);
}

/// Cotangent-weight assembly and dense solve.
fn cotangent_solve(mesh: &FemMesh, boundary: &BoundaryRecord) -> Vec<f64> {
    let n = mesh.nodes.len();
    let mut k = DMatrix::<f64>::zeros(n, n);
    for tri in &mesh.triangles {
        for s in 0..3 {
            let (o, i, j) = (tri[s], tri[(s + 1) % 3], tri[(s + 2) % 3]);
            let (u, v) = (
                [mesh.nodes[i][0] - mesh.nodes[o][0], mesh.nodes[i][1] - mesh.nodes[o][1]],
                [mesh.nodes[j][0] - mesh.nodes[o][0], mesh.nodes[j][1] - mesh.nodes[o][1]],
            );
            let cot = (u[0] * v[0] + u[1] * v[1]) / (u[0] * v[1] - u[1] * v[0]);
            let w = cot / 2.0;
            k[(i, j)] -= w;
            k[(j, i)] -= w;
            k[(i, i)] += w;
            k[(j, j)] += w;
        }
    }
    let mut rhs = DVector::<f64>::zeros(n);
    for &(v, x) in &boundary.values {
        k.row_mut(v).fill(0.0);
        k[(v, v)] = 1.0;
        rhs[v] = x;
    }
    k.lu().solve(&rhs).unwrap().iter().copied().collect()
}

#[test]
fn flat_solve_matches_cotangent_solve() {
    let d = MarkedDomain::new(Domain::Rect { x0: 0.0, x1: 2.0, y0: 0.0, y1: 1.0 }, [0.5, 0.0], [2.0, 0.75]).unwrap();
    let sol = solve_h(&SurfaceSpec::flat(d.domain), &d, 0.125).unwrap();
    let oracle = cotangent_solve(&sol.mesh, &sol.boundary);
    let dev = sol.values.iter().zip(&oracle).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(dev < 1e-10, "{dev}");
}

#[test]
fn boost_equivalence() {
    let d = MarkedDomain::new(Domain::Rect { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 }, [0.25, 0.0], [1.0, 0.75]).unwrap();
    let dev = boost_equivalence_check(0.3, 0.0, &d, 0.05).unwrap();
    assert!(dev <= 1e-10, "{dev}");
    let dev = boost_equivalence_check(0.2, -0.4, &d, 0.1).unwrap();
    assert!(dev <= 1e-10, "{dev}");
    assert!(boost_equivalence_check(0.8, 0.8, &d, 0.05).is_err());
}

fn sector_marked() -> MarkedDomain {
    let s = catenoid_sector(1.0);
    let t = PI / 4.0;
    MarkedDomain::new(s.domain, [1.5 * t.cos(), 1.5 * t.sin()], [0.5 * t.cos(), 0.5 * t.sin()]).unwrap()
}

#[test]
fn catenoid_solution_is_harmonic_in_the_interior() {
    let s = catenoid_sector(1.0);
    let d = sector_marked();
    let p = [0.9 * (PI / 8.0).cos(), 0.9 * (PI / 8.0).sin()];
    let mut residuals = Vec::new();
    for h in [0.05, 0.025] {
        let sol = solve_h(&s, &d, h).unwrap();
        let fit = sol.local_quadratic(p, 6.0 * h).unwrap();
        let lb = laplace_beltrami(&s, &fit, p).unwrap();
        let flat = fit.hess(p)[0][0] + fit.hess(p)[1][1];
        residuals.push(lb.abs());
        // the curved operator differs from the flat one
        assert!(lb.abs() < 0.2 * flat.abs().max(1.0), "{lb} vs {flat}");
    }
    assert!(residuals[1] < residuals[0], "{residuals:?}");
}

#[test]
fn catenoid_self_convergence() {
    let s = catenoid_sector(1.0);
    let d = sector_marked();
    let probes = [
        [0.9 * (PI / 8.0).cos(), 0.9 * (PI / 8.0).sin()],
        [1.1 * (3.0 * PI / 8.0).cos(), 1.1 * (3.0 * PI / 8.0).sin()],
    ];
    let conv = self_convergence(&s, &d, 0.1, &probes).unwrap();
    for (o, dif) in conv.orders.iter().zip(&conv.differences) {
        assert!(*o >= 1.8, "order {o}, differences {dif:?}");
    }
}

#[test]
fn csv_and_probes() {
    let d = MarkedDomain::symmetric_square();
    let sol = solve_h(&SurfaceSpec::flat(d.domain), &d, 0.25).unwrap();
    let csv = sol.to_csv();
    assert!(csv.starts_with("node_id,x,y,h\n"));
    assert_eq!(csv.lines().count(), sol.mesh.nodes.len() + 1);
    assert!(sol.interpolate([2.0, 0.5]).is_none());
    let n = sol.boundary.node_a;
    assert_eq!(sol.interpolate(sol.mesh.nodes[n]), Some(0.5));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn maximum_principle(ax in 0.05f64..0.95, by in 0.05f64..0.95, a in 0.0f64..0.5, b in -0.5f64..0.5) {
        let d = MarkedDomain::new(Domain::unit_square(), [ax, 0.0], [by, 1.0]).unwrap();
        let spec = SurfaceSpec::new(SurfaceKind::Tilted { a, b }, d.domain).unwrap();
        let sol = solve_h(&spec, &d, 0.1).unwrap();
        prop_assert!(sol.values.iter().all(|&h| (-1e-12..=1.0 + 1e-12).contains(&h)));
    }
}

#[test]
fn boundary_projection() {
    let sq = Domain::unit_square();
    assert_eq!(nearest_boundary_point(&sq, [0.3, 0.1]), [0.3, 0.0]);
    assert_eq!(nearest_boundary_point(&sq, [1.2, 0.4]), [1.0, 0.4]);
    assert!((boundary_distance(&sq, [0.5, 0.5]) - 0.5).abs() < 1e-15);
    let sector = Domain::AnnularSector { r0: 0.5, r1: 1.5, phi0: 0.0, phi1: PI / 2.0 };
    let q = nearest_boundary_point(&sector, [1.0, 1.0]);
    assert!((q[0].hypot(q[1]) - 1.5).abs() < 1e-12);
    assert!((boundary_distance(&sector, [1.0, 0.1]) - 0.1).abs() < 1e-12);
    // outside the angular range the rays are closest
    assert!((boundary_distance(&sector, [1.0, -0.2]) - 0.2).abs() < 1e-12);
}

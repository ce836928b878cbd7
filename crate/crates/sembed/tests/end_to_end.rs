use sembed::continuum::{solve_h, MarkedDomain};
use sembed::discrete_ops::{assemble_with, Factorization};
use sembed::fkmodel::{build_h, build_h_from_estimate, estimate_f, exact_f, EdgeRatio, FkDomain, McOptions};
use sembed::quadgraph::DobrushinBoundary;
use sembed::sembedding::{
    build_maximal_triangulation, catenoid_sector, read_embedding, write_embedding, LorentzMap, SEmbedding, SurfaceSpec,
};
use sembed::C64;

fn lattice(w: usize, h: usize) -> SEmbedding {
    SEmbedding::flat_rect_lattice(w, h, 1.0, C64::new(0.0, 0.0))
}

#[test]
fn embedding_text_round_trip() {
    let e = build_maximal_triangulation(&catenoid_sector(1.0), 0.2).unwrap().embedding;
    let b = DobrushinBoundary::balanced(e.graph()).unwrap();
    let (back, bb) = read_embedding(&write_embedding(&e, Some(&b))).unwrap();
    assert_eq!(bb, Some(b));
    assert_eq!(back.graph().quads(), e.graph().quads());
    for (x, y) in back.positions().iter().zip(e.positions()) {
        assert!((x - y).norm() < 1e-14);
    }
    for (x, y) in back.weights().iter().zip(e.weights()) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn both_factorisations_give_the_same_laplacian_on_a_catenoid() {
    let e = build_maximal_triangulation(&catenoid_sector(1.0), 0.1).unwrap().embedding;
    let rows = e.graph().interior_vertices();
    let a = assemble_with(&e, &rows, Factorization::DOmegaDbarS).unwrap();
    let b = assemble_with(&e, &rows, Factorization::DbarOmegaDS).unwrap();
    for &v in a.rows() {
        for &(u, x) in a.stencil(v).unwrap() {
            assert!((x - b.entry(v, u)).abs() < 1e-9 * x.abs().max(1.0));
        }
    }
}

#[test]
fn monte_carlo_h_agrees_with_enumeration() {
    let e = lattice(3, 3);
    let d = FkDomain::balanced(&e, EdgeRatio::default()).unwrap();
    let exact = build_h(&d, &exact_f(&d, 12).unwrap(), 1e-10).unwrap();
    let opts = McOptions { n_samples: 200_000, ..Default::default() };
    let est = build_h_from_estimate(&d, &estimate_f(&d, &opts, 9).unwrap(), 6.0).unwrap();
    for v in 0..d.n_vertices() {
        let diff = (est.h[v] - exact.values[v].re).abs();
        assert!(diff <= 4.0 * est.stderr[v] + 1e-12, "vertex {v}: {diff} vs {}", est.stderr[v]);
    }
}

#[test]
fn exact_h_is_unchanged_by_a_boost_of_the_embedding() {
    let e = lattice(3, 3);
    let boosted = e.apply_isometry(&LorentzMap::boost(0.3, 0.1).unwrap()).unwrap();
    let b = DobrushinBoundary::balanced(e.graph()).unwrap();
    let d0 = FkDomain::new(&e, b.clone(), EdgeRatio::default());
    let d1 = FkDomain::new(&boosted, b, EdgeRatio::default());
    let h0 = build_h(&d0, &exact_f(&d0, 12).unwrap(), 1e-10).unwrap();
    let h1 = build_h(&d1, &exact_f(&d1, 12).unwrap(), 1e-10).unwrap();
    for (x, y) in h0.values.iter().zip(&h1.values) {
        assert!((x - y).norm() < 1e-12);
    }
}

#[test]
fn discrete_h_is_near_the_continuum_value_at_the_centre() {
    // 8 by 8 lattice on the unit square, marks at the middle of bottom and top
    let e = SEmbedding::flat_rect_lattice(8, 8, 0.125, C64::new(0.0, 0.0));
    let g = e.graph();
    let cyc = g.boundary_cycle();
    let m = cyc.len();
    let mid = |k: usize| (e.s(cyc[k]) + e.s(cyc[(k + 1) % m])) / 2.0;
    let pick = |target: C64, primal_first: bool| {
        (0..m)
            .filter(|&k| g.is_primal(cyc[k]) == primal_first && g.is_primal(cyc[(k + 1) % m]) != primal_first)
            .min_by(|&x, &y| (mid(x) - target).norm().total_cmp(&(mid(y) - target).norm()))
            .unwrap()
    };
    let (ka, kb) = (pick(C64::new(0.5, 0.0), true), pick(C64::new(0.5, 1.0), false));
    let b = DobrushinBoundary::from_pairs(g, (cyc[ka], cyc[(ka + 1) % m]), (cyc[(kb + 1) % m], cyc[kb])).unwrap();
    let d = FkDomain::new(&e, b, EdgeRatio::default());
    let est = estimate_f(&d, &McOptions { n_samples: 40_000, ..Default::default() }, 3).unwrap();
    let h = build_h_from_estimate(&d, &est, 6.0).unwrap();
    // continuum marks at the midpoints of the marked corners
    let (ma, mb) = (mid(ka), mid(kb));
    let marked = MarkedDomain::new(MarkedDomain::symmetric_square().domain, [ma.re, ma.im], [mb.re, mb.im]).unwrap();
    let fem = solve_h(&SurfaceSpec::flat(marked.domain), &marked, 1.0 / 32.0).unwrap();
    // the vertex nearest the centre
    let v = (0..g.n_vertices())
        .min_by(|&x, &y| (e.s(x) - C64::new(0.5, 0.5)).norm().total_cmp(&(e.s(y) - C64::new(0.5, 0.5)).norm()))
        .unwrap();
    let z = e.s(v);
    let hc = fem.interpolate([z.re, z.im]).unwrap();
    assert!((h.h[v] - hc).abs() < 0.1, "{} vs {hc}", h.h[v]);
}

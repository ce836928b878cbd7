use std::collections::HashSet;
use std::f64::consts::{FRAC_PI_2, PI};

use super::observable::exact_f_with_phase;
use super::*;
use crate::discrete_ops::{
    assemble_s_laplacian, check_discrete_integral, check_s_positivity, d_s, reconstruct_quad_field,
};
use crate::quadgraph::RectLayout;
use crate::sembedding::LorentzMap;

fn lattice(w: usize, h: usize) -> SEmbedding {
    SEmbedding::flat_rect_lattice(w, h, 1.0, C64::new(0.0, 0.0))
}

fn balanced(e: &SEmbedding) -> FkDomain {
    FkDomain::balanced(e, EdgeRatio::AsPrinted).unwrap()
}

/// 1×1 lattice whose wired arc is the single vertex (0,0).
fn single_edge() -> (SEmbedding, FkDomain) {
    let e = lattice(1, 1);
    let lay = RectLayout::new(1, 1);
    let b =
        DobrushinBoundary::from_pairs(e.graph(), (lay.id(0, 0), lay.id(1, 0)), (lay.id(0, 0), lay.id(0, 1))).unwrap();
    let d = FkDomain::new(&e, b, EdgeRatio::AsPrinted);
    (e, d)
}

#[test]
fn edge_ratio_conventions() {
    let x = 2f64.sqrt() - 1.0;
    assert!((EdgeRatio::AsPrinted.ratio(x) - 2f64.sqrt()).abs() < 1e-15);
    assert!((EdgeRatio::Standard.ratio(x) - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    assert_eq!("standard".parse::<EdgeRatio>().unwrap(), EdgeRatio::Standard);
    assert_eq!(EdgeRatio::default().to_string(), "as_printed");
    assert!("other".parse::<EdgeRatio>().is_err());
}

#[test]
fn weight_of_single_edge_domain() {
    let (_, d) = single_edge();
    assert_eq!(d.n_free(), 1);
    let r = d.ratios()[0];
    let closed = FkConfig::all_closed(&d);
    let open = FkConfig::all_open(&d);
    // closed: wired cluster and the isolated vertex (1,1)
    assert_eq!(d.cluster_count(&closed), 2);
    assert!((d.weight(&closed) - 4.0).abs() < 1e-12);
    assert!((d.weight(&open) / d.weight(&closed) - r / 2.0).abs() < 1e-12);
    let dist = enumerate_exact(&d, DEFAULT_ENUMERATION_CAP).unwrap();
    assert!((dist.prob(1) - r / (2.0 + r)).abs() < 1e-12);
}

#[test]
fn weight_when_endpoints_already_joined() {
    // balanced split of the 1×1 lattice wires both primal vertices
    let e = lattice(1, 1);
    let d = balanced(&e);
    assert_eq!(d.boundary().primal_arc.len(), 2);
    let (c, o) = (FkConfig::all_closed(&d), FkConfig::all_open(&d));
    assert!((d.weight(&o) / d.weight(&c) - d.ratios()[0]).abs() < 1e-12);
}

#[test]
fn enumeration_respects_cap() {
    let e = lattice(3, 3);
    let d = balanced(&e);
    assert_eq!(enumerate_exact(&d, 8).unwrap_err(), FkError::CapExceeded { free: 9, cap: 8 });
    let dist = enumerate_exact(&d, DEFAULT_ENUMERATION_CAP).unwrap();
    assert!((dist.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

/// Independent brute force: clusters by depth-first search over an explicit
/// adjacency list, the wired arc chained by extra edges.
fn oracle_probabilities(d: &FkDomain) -> Vec<f64> {
    let n = d.n_free();
    let np = d.n_primal();
    let arc = &d.boundary().primal_arc;
    let mut ws = Vec::new();
    for mask in 0..1u64 << n {
        let mut adj = vec![Vec::new(); np];
        for w in arc.windows(2) {
            adj[w[0]].push(w[1]);
            adj[w[1]].push(w[0]);
        }
        let mut prod = 1.0;
        for (q, quad) in d.quads().iter().enumerate() {
            if mask >> q & 1 == 1 {
                adj[quad[0]].push(quad[2]);
                adj[quad[2]].push(quad[0]);
                prod *= (1.0 - d.weights()[q]) / d.weights()[q];
            }
        }
        let mut seen = vec![false; np];
        let mut clusters = 0;
        for s in 0..np {
            if seen[s] {
                continue;
            }
            clusters += 1;
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        ws.push(2f64.powi(clusters) * prod);
    }
    let z: f64 = ws.iter().sum();
    ws.iter().map(|w| w / z).collect()
}

#[test]
fn enumeration_matches_independent_oracle() {
    for (w, h) in [(2, 2), (3, 2)] {
        let e = lattice(w, h);
        let d = balanced(&e);
        let dist = enumerate_exact(&d, DEFAULT_ENUMERATION_CAP).unwrap();
        for (p, q) in dist.probabilities().iter().zip(oracle_probabilities(&d)) {
            assert!((p - q).abs() < 1e-12);
        }
    }
}

#[test]
fn membership_identity_for_every_configuration() {
    for (w, h) in [(2, 2), (3, 2), (2, 3)] {
        let e = lattice(w, h);
        let d = balanced(&e);
        for mask in 0..1u64 << d.n_free() {
            let config = FkConfig::from_mask(d.n_free(), mask);
            let curve = trace_interface(&config, &d).unwrap();
            assert_eq!(curve.corners.first(), Some(&d.boundary().a));
            assert_eq!(curve.corners.last(), Some(&d.boundary().b));
            let on: HashSet<usize> = curve.corners.iter().copied().collect();
            assert_eq!(on.len(), curve.corners.len(), "corner visited twice");
            for (c, joined) in d.boundary_connection(&config).into_iter().enumerate() {
                assert_eq!(on.contains(&c), joined, "{w}x{h} mask {mask} corner {c}");
            }
        }
    }
}

#[test]
fn extreme_configurations_hug_the_arcs() {
    let e = lattice(4, 2);
    let d = balanced(&e);
    let closed = trace_interface(&FkConfig::all_closed(&d), &d).unwrap();
    for &c in &closed.corners {
        assert!(d.is_on_primal_arc(d.corner(c).0));
    }
    let open = trace_interface(&FkConfig::all_open(&d), &d).unwrap();
    for &c in &open.corners {
        assert!(d.is_on_dual_arc(d.corner(c).1));
    }
}

#[test]
fn winding_of_simple_paths() {
    let e = lattice(3, 3);
    let d = balanced(&e);
    let g = e.graph();
    let lay = RectLayout::new(3, 3);
    let c = |a: (usize, usize), b: (usize, usize)| {
        let (u, w) = (lay.id(a.0, a.1), lay.id(b.0, b.1));
        g.corner_between(u, w).unwrap()
    };
    // around primal (1,1): dual (2,1) then dual (1,2) is a left quarter turn
    let left = InterfaceCurve::from_corners(&d, vec![c((1, 1), (2, 1)), c((1, 1), (1, 2))]).unwrap();
    assert!((winding(&left, left.corners[0]).unwrap() - FRAC_PI_2).abs() < 1e-12);
    // left around a primal vertex, right around a dual vertex: straight on
    let straight =
        InterfaceCurve::from_corners(&d, vec![c((1, 1), (1, 0)), c((1, 1), (2, 1)), c((2, 2), (2, 1))]).unwrap();
    assert!(winding(&straight, straight.corners[0]).unwrap().abs() < 1e-12);
    // a full loop around (1,1) adds one turn
    let fan = g.fan(lay.id(1, 1)).corners.clone();
    let mut looped = vec![fan[0]];
    looped.extend(fan.iter().skip(1));
    looped.push(fan[0]);
    let curve = InterfaceCurve::from_corners(&d, looped).unwrap();
    assert!((winding(&curve, fan[0]).unwrap() - 2.0 * PI).abs() < 1e-12);
    assert_eq!(winding(&curve, c((0, 0), (1, 0))), Err(FkError::NotOnCurve(c((0, 0), (1, 0)))));
    assert!(InterfaceCurve::from_corners(&d, vec![c((1, 1), (2, 1)), c((2, 2), (1, 2))]).is_err());
}

#[test]
fn sampler_streams_are_deterministic() {
    let e = lattice(3, 2);
    let d = balanced(&e);
    let a: Vec<_> = mcmc_sample(&d, 200, 9).collect();
    let b: Vec<_> = mcmc_sample(&d, 200, 9).collect();
    assert_eq!(a, b);
    assert_eq!(mcmc_sample(&d, 0, 9).count(), 0);
    let s = Sampler::new(&d, SamplerKind::HeatBath, 9, 0);
    assert_eq!(s.config(), &FkConfig::all_closed(&d));
    let c: Vec<_> = mcmc_sample(&d, 200, 10).collect();
    assert_ne!(a, c);
}

fn empirical_frequencies(d: &FkDomain, kind: SamplerKind, sweeps: usize, seed: u64) -> Vec<f64> {
    let mut s = Sampler::new(d, kind, seed, 0);
    for _ in 0..100 {
        s.sweep();
    }
    let mut counts = vec![0.0; 1 << d.n_free()];
    for _ in 0..sweeps {
        s.sweep();
        counts[s.config().mask() as usize] += 1.0;
    }
    counts.iter().map(|c| c / sweeps as f64).collect()
}

#[test]
fn samplers_reach_the_exact_distribution() {
    let e = lattice(2, 2);
    let d = balanced(&e);
    let exact = enumerate_exact(&d, DEFAULT_ENUMERATION_CAP).unwrap();
    for kind in [SamplerKind::HeatBath, SamplerKind::SwendsenWang] {
        let f = empirical_frequencies(&d, kind, 200_000, 4);
        for (m, (&p, &q)) in exact.probabilities().iter().zip(&f).enumerate() {
            // generous bound: correlated samples
            let sd = (p * (1.0 - p) / 200_000.0).sqrt();
            assert!((p - q).abs() < 6.0 * sd + 1e-4, "{kind} mask {m}: {p} vs {q}");
        }
    }
}

fn assert_exact_identities(e: &SEmbedding, d: &FkDomain) {
    let f = exact_f(d, DEFAULT_ENUMERATION_CAP).unwrap();
    assert!(f.max_line_residual() < 1e-12);
    let x2 = observable_squares(d, &f);
    for (q, _) in d.quads().iter().enumerate() {
        let cs = e.graph().quad_corners(q);
        assert!((x2[cs[0]] + x2[cs[2]] - x2[cs[1]] - x2[cs[3]]).norm() < 1e-12);
    }
    let (fe, residual) = reconstruct_quad_field(e, &f).unwrap();
    assert!(residual < 1e-10);
    let h = build_h(d, &f, 1e-10).unwrap();
    let dsh = d_s(e, &h).unwrap();
    for q in 0..fe.values.len() {
        let target = fe.values[q] * fe.values[q] / C64::new(0.0, 4.0);
        assert!((dsh.values[q] - target).norm() < 1e-10);
    }
    assert!(check_discrete_integral(e, &fe, &h) < 1e-10);
    let interior = e.graph().interior_vertices();
    if !interior.is_empty() {
        let lap = assemble_s_laplacian(e, &interior).unwrap();
        assert!(check_s_positivity(&lap, &h) >= -1e-10);
    }
}

#[test]
fn exact_observable_identities_on_lattices() {
    for (w, h) in [(1, 1), (2, 1), (2, 2), (3, 3)] {
        let e = lattice(w, h);
        assert_exact_identities(&e, &balanced(&e));
    }
}

#[test]
fn exact_observable_on_single_edge() {
    let (e, d) = single_edge();
    let f = exact_f(&d, DEFAULT_ENUMERATION_CAP).unwrap();
    let dist = enumerate_exact(&d, DEFAULT_ENUMERATION_CAP).unwrap();
    // two-configuration average of the interface contributions
    let mut expected = vec![C64::new(0.0, 0.0); d.n_corners()];
    let tb = d.tau(d.boundary().b).sqrt();
    for (config, p) in dist.iter() {
        let curve = trace_interface(&config, &d).unwrap();
        for (k, &c) in curve.corners.iter().enumerate() {
            let w: f64 = curve.turns[k..].iter().sum();
            expected[c] += p * C64::from_polar(1.0, w / 2.0) / (tb * e.corner_length(c).sqrt());
        }
    }
    for (a, b) in f.values.iter().zip(&expected) {
        assert!((a - b).norm() < 1e-14);
    }
    assert_exact_identities(&e, &d);
}

#[test]
fn opposite_phase_convention_leaves_lines() {
    let e = lattice(2, 2);
    let d = balanced(&e);
    let f = exact_f_with_phase(&d, DEFAULT_ENUMERATION_CAP, -1.0).unwrap();
    assert!(f.max_line_residual() > 1e-3);
}

#[test]
fn zero_observable_is_rejected() {
    let e = lattice(2, 2);
    let d = balanced(&e);
    let f = crate::discrete_ops::CornerField::new(&e, vec![C64::new(0.0, 0.0); d.n_corners()]).unwrap();
    assert!(matches!(build_h(&d, &f, 1e-10), Err(FkError::BoundaryValue { .. })));
}

#[test]
fn h_is_embedding_agnostic() {
    let e = lattice(3, 2);
    let d = balanced(&e);
    let h = build_h(&d, &exact_f(&d, DEFAULT_ENUMERATION_CAP).unwrap(), 1e-10).unwrap();
    let boosted = e.apply_isometry(&LorentzMap::boost(0.3, 0.1).unwrap()).unwrap();
    let db = FkDomain::new(&boosted, d.boundary().clone(), EdgeRatio::AsPrinted);
    for (x, y) in d.weights().iter().zip(db.weights()) {
        assert!((x - y).abs() < 1e-12);
    }
    let hb = build_h(&db, &exact_f(&db, DEFAULT_ENUMERATION_CAP).unwrap(), 1e-10).unwrap();
    for (x, y) in h.values.iter().zip(&hb.values) {
        assert!((x - y).norm() < 1e-12);
    }
}

#[test]
fn monte_carlo_estimate_is_close_to_exact() {
    let e = lattice(2, 2);
    let d = balanced(&e);
    let exact = exact_f(&d, DEFAULT_ENUMERATION_CAP).unwrap();
    let opts = McOptions { n_samples: 40_000, chains: 2, batches: 10, ..McOptions::default() };
    let est = estimate_f(&d, &opts, 3).unwrap();
    assert_eq!(est.batch_means.len(), 20);
    for c in 0..d.n_corners() {
        let err = (est.mean[c] - exact.values[c]).norm();
        assert!(err <= 4.0 * est.stderr[c] + 1e-12, "corner {c}: {err} vs {}", est.stderr[c]);
    }
    assert!(est.as_corner_field(&d).max_line_residual() < 1e-12);
    let h = build_h_from_estimate(&d, &est, 10.0).unwrap();
    let exact_h = build_h(&d, &exact, 1e-10).unwrap();
    for v in 0..d.n_vertices() {
        assert!((h.h[v] - exact_h.values[v].re).abs() <= 5.0 * h.stderr[v] + 1e-9);
    }
}

#[test]
fn estimate_is_independent_of_job_count() {
    let e = lattice(2, 2);
    let d = balanced(&e);
    let one = McOptions { n_samples: 2_000, chains: 3, jobs: 1, ..McOptions::default() };
    let three = McOptions { jobs: 3, ..one.clone() };
    assert_eq!(estimate_f(&d, &one, 1).unwrap(), estimate_f(&d, &three, 1).unwrap());
}

#[test]
fn least_squares_h_reproduces_exact_h() {
    let e = lattice(3, 3);
    let d = balanced(&e);
    let exact = exact_f(&d, DEFAULT_ENUMERATION_CAP).unwrap();
    let est = ObservableEstimate {
        mean: exact.values.clone(),
        stderr: vec![0.0; d.n_corners()],
        samples: 1,
        batch_means: vec![exact.values.clone(); 3],
    };
    let h = build_h_from_estimate(&d, &est, 3.0).unwrap();
    let exact_h = build_h(&d, &exact, 1e-10).unwrap();
    for v in 0..d.n_vertices() {
        assert!((h.h[v] - exact_h.values[v].re).abs() < 1e-10);
        assert!(h.stderr[v] < 1e-12);
    }
}

fn hexagon_embedding() -> SEmbedding {
    let mut pts = vec![[0.0, 0.0]];
    for k in 0..6 {
        let t = k as f64 * std::f64::consts::PI / 3.0 + 0.05 * (k as f64).sin();
        let r = 1.0 + 0.08 * (k as f64 * 1.7).cos();
        pts.push([r * t.cos(), r * t.sin()]);
    }
    let heights: Vec<f64> = pts.iter().map(|p| 0.2 * p[0] + 0.1 * p[1] * p[1]).collect();
    let triangles = (0..6).map(|k| [0, 1 + k, 1 + (k + 1) % 6]).collect();
    let mesh = crate::sembedding::Mesh { points: pts, triangles };
    crate::sembedding::build_triangulated_embedding(mesh, &heights, 1.0).unwrap().embedding
}

#[test]
fn only_the_square_root_weights_are_s_holomorphic_off_the_square_lattice() {
    let emb = hexagon_embedding();
    let residual = |wf| {
        let b = DobrushinBoundary::balanced(emb.graph()).unwrap();
        let dom = FkDomain::with_conventions(&emb, b, EdgeRatio::AsPrinted, wf);
        let f = exact_f(&dom, DEFAULT_ENUMERATION_CAP).unwrap();
        crate::discrete_ops::reconstruct_quad_field(&emb, &f).unwrap().1
    };
    assert!(residual(WeightFormula::SquareRoot) < 1e-12);
    assert!(residual(WeightFormula::AsPrinted) > 0.1);
    assert_eq!(WeightFormula::default(), WeightFormula::SquareRoot);
}

//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runtime limits count towards the verdict.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use sembed::continuum::{maximal_residual, self_convergence, solve_h, MarkedDomain};
use sembed::discrete_ops::{dbar_s, VertexField};
use sembed::fkmodel::{estimate_f, exact_f, EdgeRatio, FkDomain, McOptions, SamplerKind};
use sembed::sembedding::{build_maximal_triangulation, catenoid_sector, Domain, SEmbedding, SurfaceKind, SurfaceSpec};
use sembed::C64;
use sembed_lab::catalog::small_catalog;
use sembed_lab::config::ExperimentConfig;
use sembed_lab::identity::{run_identity_suite, SuiteOptions};
use sembed_lab::pipeline::run_convergence_study;
use sembed_lab::sampler_check::stationary_check;

type Verdict = Result<(bool, String), String>;

fn config(name: &str) -> Result<ExperimentConfig, String> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    ExperimentConfig::parse(&text).map_err(|e| e.to_string())
}

fn flat_16() -> SEmbedding {
    SEmbedding::flat_rect_lattice(16, 16, 1.0 / 16.0, C64::new(0.0, 0.0))
}

fn catenoid_005() -> Result<SEmbedding, String> {
    build_maximal_triangulation(&catenoid_sector(1.0), 0.05).map(|m| m.embedding).map_err(|e| e.to_string())
}

fn operator_kernel() -> Verdict {
    let mut worst: f64 = 0.0;
    for e in [flat_16(), catenoid_005()?] {
        let n = e.graph().n_vertices();
        let fields = [
            VertexField::constant(n, C64::new(1.0, 0.0)),
            VertexField::new(e.positions().to_vec()),
            VertexField::real(e.lifts()),
        ];
        for f in &fields {
            let r = dbar_s(&e, f).map_err(|e| e.to_string())?;
            worst = worst.max(r.max_abs());
        }
    }
    Ok((worst <= 1e-10, format!("max |dbar_S 1|, |dbar_S S|, |dbar_S Q| = {worst:.2e}")))
}

fn laplacian_structure() -> Verdict {
    let (mut sym, mut imag, mut lorentz) = (0.0f64, 0.0f64, 0.0f64);
    let mut ok = true;
    for e in [flat_16(), catenoid_005()?] {
        let r = run_identity_suite(&e, None, None, &SuiteOptions { boosts: 20, max_beta: 0.5, seed: 2, exact_cap: 0 });
        for (name, slot) in
            [("laplacian_symmetric", &mut sym), ("laplacian_real", &mut imag), ("laplacian_lorentz", &mut lorentz)]
        {
            let c = r.get(name).ok_or(format!("missing check {name}"))?;
            *slot = slot.max(c.defect);
            ok &= c.passed;
        }
    }
    Ok((ok, format!("asymmetry {sym:.2e}, imaginary {imag:.2e}, boosted relative {lorentz:.2e}")))
}

fn exact_identities() -> Verdict {
    let mut failed = Vec::new();
    let catalog = small_catalog().map_err(|e| e.to_string())?;
    for e in &catalog {
        let r = run_identity_suite(&e.embedding, Some(&e.domain), None, &SuiteOptions::default());
        if !r.passed() || r.get("discrete_integral").is_none() {
            failed.push(e.name);
        }
    }
    Ok((failed.is_empty(), format!("{} domains, failing: {failed:?}", catalog.len())))
}

fn sampler_correctness() -> Verdict {
    let e = SEmbedding::flat_rect_lattice(3, 2, 1.0, C64::new(0.0, 0.0));
    let d = FkDomain::balanced(&e, EdgeRatio::default()).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    let mut ok = d.n_free() == 6;
    for kind in [SamplerKind::HeatBath, SamplerKind::SwendsenWang] {
        let r = stationary_check(&d, kind, 1_000_000, 100, 17).map_err(|e| e.to_string())?;
        ok &= r.passed();
        parts.push(format!("{kind} chi2 {:.1}/{:.1} on {} dof", r.statistic, r.threshold, r.dof));
    }
    Ok((ok, parts.join(", ")))
}

fn mc_consistency() -> Verdict {
    let e = SEmbedding::flat_rect_lattice(2, 2, 1.0, C64::new(0.0, 0.0));
    let d = FkDomain::balanced(&e, EdgeRatio::default()).map_err(|e| e.to_string())?;
    let exact = exact_f(&d, 12).map_err(|e| e.to_string())?;
    let opts = McOptions {
        n_samples: 1_000_000,
        chains: 4,
        batches: 25,
        sampler: SamplerKind::HeatBath,
        ..Default::default()
    };
    let est = estimate_f(&d, &opts, 23).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for c in 0..d.n_corners() {
        let diff = (est.mean[c] - exact.values[c]).norm();
        // corners every interface visits have no variance; only rounding is left
        ok &= diff <= 3.0 * est.stderr[c] + 1e-12;
        if est.stderr[c] > 1e-12 {
            worst = worst.max(diff / est.stderr[c]);
        }
    }
    Ok((ok, format!("{} corners, max |estimate - exact| = {worst:.2} stderr", d.n_corners())))
}

fn flat_trend() -> Verdict {
    let cfg = config("flat_square.conf")?;
    let study = run_convergence_study(&cfg, 1).map_err(|e| e.to_string())?;
    let finest = study.runs.last().ok_or("no runs")?;
    let centre = finest.probes.iter().filter(|p| p.point == [0.5, 0.5]).map(|p| p.error).fold(f64::NAN, f64::max);
    let ok = study.all_decreasing() && centre <= 0.05;
    Ok((
        ok,
        format!(
            "{}/{} probe trends decreasing, centre error at delta {} = {centre:.4}",
            study.trend.iter().filter(|t| t.decreasing).count(),
            study.trend.len(),
            finest.instance.delta
        ),
    ))
}

fn lorentz_agnostic() -> Verdict {
    let cfg = config("tilted_boost.conf")?;
    let study = run_convergence_study(&cfg, 1).map_err(|e| e.to_string())?;
    let (dh, dw) = study.max_boost_deviation();
    let rows = study.runs.iter().map(|r| r.boost.len()).sum::<usize>();
    Ok((rows > 0 && dh <= 1e-12 && dw <= 1e-9, format!("{rows} probes, max |dH| {dh:.2e}, max |dw| {dw:.2e}")))
}

fn curved_trend() -> Verdict {
    let cfg = config("catenoid_sector.conf")?;
    let study = run_convergence_study(&cfg, 1).map_err(|e| e.to_string())?;
    let f = study.decreasing_fraction();
    Ok((f >= 0.8, format!("{:.0}% of {} probes decreasing beyond 2 combined stderr", 100.0 * f, study.trend.len())))
}

fn continuum_sanity() -> Verdict {
    let mut residual: f64 = 0.0;
    let unit = Domain::Rect { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 };
    for (a, b) in [(0.3, 0.0), (0.2, -0.4), (-0.5, 0.5), (0.0, 0.9)] {
        let s = SurfaceSpec::new(SurfaceKind::Tilted { a, b }, unit).map_err(|e| e.to_string())?;
        for p in unit.sample(5) {
            residual = residual.max(maximal_residual(&s, p).map_err(|e| e.to_string())?.abs());
        }
    }
    let cat = catenoid_sector(1.0);
    for p in cat.domain.sample(7) {
        residual = residual.max(maximal_residual(&cat, p).map_err(|e| e.to_string())?.abs());
    }
    let t = PI / 4.0;
    let marked = MarkedDomain::new(cat.domain, [1.5 * t.cos(), 1.5 * t.sin()], [0.5 * t.cos(), 0.5 * t.sin()])
        .map_err(|e| e.to_string())?;
    let probes = [
        [0.9 * (PI / 8.0).cos(), 0.9 * (PI / 8.0).sin()],
        [1.1 * (3.0 * PI / 8.0).cos(), 1.1 * (3.0 * PI / 8.0).sin()],
    ];
    let conv = self_convergence(&cat, &marked, 0.1, &probes).map_err(|e| e.to_string())?;
    let order = conv.orders.iter().copied().fold(f64::INFINITY, f64::min);
    let sq = MarkedDomain::symmetric_square();
    let sol = solve_h(&SurfaceSpec::flat(sq.domain), &sq, 1.0 / 32.0).map_err(|e| e.to_string())?;
    let centre = sol.interpolate([0.5, 0.5]).ok_or("centre outside mesh")?;
    let ok = residual <= 1e-10 && order >= 1.8 && (centre - 0.5).abs() <= 1e-3;
    Ok((ok, format!("maximal residual {residual:.2e}, FEM order {order:.2}, symmetric centre {centre:.5}")))
}

/// name, runtime limit in seconds, check
type Criterion = (&'static str, f64, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("operator kernel", 1.0, operator_kernel),
        ("s-Laplacian structure", 10.0, laplacian_structure),
        ("exact-observable identities", 300.0, exact_identities),
        ("sampler correctness", 120.0, sampler_correctness),
        ("MC observable consistency", 300.0, mc_consistency),
        ("convergence trend, flat", 1800.0, flat_trend),
        ("Lorentz agnosticism", 600.0, lorentz_agnostic),
        ("convergence trend, catenoid", 3600.0, curved_trend),
        ("continuum oracle sanity", 60.0, continuum_sanity),
    ];
    let mut all = true;
    for (k, (name, limit, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let verdict = run();
        let secs = t.elapsed().as_secs_f64();
        let (passed, detail) = match verdict {
            Ok((p, d)) => (p && secs <= *limit, d),
            Err(e) => (false, format!("error: {e}")),
        };
        all &= passed;
        println!(
            "criterion {} {}: {name}: {detail} ({secs:.1} s, limit {limit:.0} s)",
            k + 1,
            if passed { "PASS" } else { "FAIL" }
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

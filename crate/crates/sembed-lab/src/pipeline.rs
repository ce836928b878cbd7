//! Per-δ instances, observable estimation and the convergence study.

use std::time::Instant;

use sembed::continuum::{nearest_boundary_point, solve_h, ContinuumError, FemSolution, MarkedDomain};
use sembed::fkmodel::{build_h, build_h_from_estimate, estimate_f, exact_f, FkDomain, FkError, McOptions};
use sembed::quadgraph::{DobrushinBoundary, DobrushinError};
use sembed::sembedding::{build_maximal_triangulation, Domain, LorentzMap, SEmbedding};
use sembed::C64;

use crate::config::{ExperimentConfig, LatticeKind};

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("embedding: {0}")]
    Embedding(String),
    #[error(transparent)]
    Dobrushin(#[from] DobrushinError),
    #[error(transparent)]
    Fk(#[from] FkError),
    #[error(transparent)]
    Continuum(#[from] ContinuumError),
    #[error("probe {0:?} lies outside every quad")]
    ProbeOutside([f64; 2]),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Embedded Dobrushin domain at one mesh size.
#[derive(Clone, Debug)]
pub struct Instance {
    pub delta: f64,
    pub embedding: SEmbedding,
    pub boundary: DobrushinBoundary,
    pub fk: FkDomain,
    /// continuum domain with the corner midpoints of a and b projected onto its boundary
    pub marked: MarkedDomain,
}

/// Boundary corners nearest to the targets: `a` stepping primal to dual
/// along the counterclockwise boundary cycle, `b` stepping dual to primal.
pub fn marked_corners(emb: &SEmbedding, a: [f64; 2], b: [f64; 2]) -> Result<DobrushinBoundary, LabError> {
    let g = emb.graph();
    let cyc = g.boundary_cycle();
    let m = cyc.len();
    let mid = |k: usize| (emb.s(cyc[k]) + emb.s(cyc[(k + 1) % m])) / 2.0;
    let nearest = |p: [f64; 2], primal_first: bool| {
        (0..m)
            .filter(|&k| g.is_primal(cyc[k]) == primal_first && g.is_primal(cyc[(k + 1) % m]) != primal_first)
            .min_by(|&x, &y| {
                let t = C64::new(p[0], p[1]);
                (mid(x) - t).norm().total_cmp(&(mid(y) - t).norm())
            })
            .ok_or_else(|| LabError::Embedding("boundary has no primal/dual alternation".into()))
    };
    let ka = nearest(a, true)?;
    let kb = nearest(b, false)?;
    Ok(DobrushinBoundary::from_pairs(g, (cyc[ka], cyc[(ka + 1) % m]), (cyc[(kb + 1) % m], cyc[kb]))?)
}

fn corner_midpoint(emb: &SEmbedding, c: usize) -> [f64; 2] {
    let k = emb.graph().corner(c);
    let z = (emb.s(k.primal) + emb.s(k.dual)) / 2.0;
    [z.re, z.im]
}

pub fn build_embedding(cfg: &ExperimentConfig, delta: f64) -> Result<SEmbedding, LabError> {
    match cfg.lattice {
        LatticeKind::Square => {
            let Domain::Rect { x0, x1, y0, y1 } = cfg.surface.domain else {
                return Err(LabError::Embedding("square lattice needs a rect domain".into()));
            };
            let w = ((x1 - x0) / delta).round() as usize;
            let h = ((y1 - y0) / delta).round() as usize;
            Ok(SEmbedding::flat_rect_lattice(w, h, delta, C64::new(x0, y0)))
        }
        LatticeKind::Triangulated => build_maximal_triangulation(&cfg.surface, delta)
            .map(|t| t.embedding)
            .map_err(|e| LabError::Embedding(e.to_string())),
    }
}

pub fn build_instance(cfg: &ExperimentConfig, delta: f64) -> Result<Instance, LabError> {
    let embedding = build_embedding(cfg, delta)?;
    instance_from(cfg, embedding, delta)
}

fn instance_from(cfg: &ExperimentConfig, embedding: SEmbedding, delta: f64) -> Result<Instance, LabError> {
    let boundary = marked_corners(&embedding, cfg.a, cfg.b)?;
    let domain = cfg.surface.domain;
    let pa = nearest_boundary_point(&domain, corner_midpoint(&embedding, boundary.a));
    let pb = nearest_boundary_point(&domain, corner_midpoint(&embedding, boundary.b));
    let marked = MarkedDomain::new(domain, pa, pb)?;
    let fk =
        FkDomain::with_conventions(&embedding, boundary.clone(), cfg.sampler.edge_ratio, cfg.sampler.weight_formula);
    Ok(Instance { delta, embedding, boundary, fk, marked })
}

/// F and H on one instance.
#[derive(Clone, Debug)]
pub struct Observables {
    pub f: Vec<C64>,
    pub f_stderr: Vec<f64>,
    pub samples: usize,
    pub h: Vec<f64>,
    pub h_stderr: Vec<f64>,
    pub exact: bool,
    /// largest propagation-of-squares defect in standard errors (MC only)
    pub propagation_z: f64,
}

pub fn mc_options(cfg: &ExperimentConfig, jobs: usize) -> McOptions {
    let s = &cfg.sampler;
    McOptions {
        n_samples: s.samples,
        burn_in: s.burn_in,
        thin: s.thin,
        chains: s.chains,
        batches: s.batches,
        sampler: s.kind,
        jobs,
    }
}

/// Exact enumeration when the domain is under the cap, Monte Carlo otherwise.
pub fn estimate_observables(cfg: &ExperimentConfig, fk: &FkDomain, jobs: usize) -> Result<Observables, LabError> {
    if fk.n_free() <= cfg.sampler.exact_cap {
        let f = exact_f(fk, cfg.sampler.exact_cap)?;
        let h = build_h(fk, &f, 1e-9)?;
        let n = f.values.len();
        return Ok(Observables {
            f: f.values,
            f_stderr: vec![0.0; n],
            samples: 0,
            h_stderr: vec![0.0; h.values.len()],
            h: h.values.iter().map(|z| z.re).collect(),
            exact: true,
            propagation_z: 0.0,
        });
    }
    let est = estimate_f(fk, &mc_options(cfg, jobs), cfg.sampler.seed)?;
    let h = build_h_from_estimate(fk, &est, 6.0)?;
    Ok(Observables {
        f: est.mean,
        f_stderr: est.stderr,
        samples: est.samples,
        h: h.h,
        h_stderr: h.stderr,
        exact: false,
        propagation_z: h.max_propagation_z,
    })
}

/// Vertex nearest to `p` and its distance.
pub fn nearest_vertex(emb: &SEmbedding, p: [f64; 2]) -> (usize, f64) {
    let t = C64::new(p[0], p[1]);
    emb.positions()
        .iter()
        .enumerate()
        .map(|(v, &z)| (v, (z - t).norm()))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("embedding has vertices")
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeRow {
    pub delta: f64,
    pub probe: usize,
    pub point: [f64; 2],
    pub vertex: usize,
    pub primal: bool,
    pub position: [f64; 2],
    pub distance: f64,
    pub h_discrete: f64,
    pub stderr: f64,
    pub h_continuum: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrendRow {
    pub probe: usize,
    pub coarse: f64,
    pub fine: f64,
    pub e_coarse: f64,
    pub e_fine: f64,
    pub combined_stderr: f64,
    /// e_fine < e_coarse − 2·combined stderr
    pub decreasing: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoostRow {
    pub delta: f64,
    pub probe: usize,
    pub vertex: usize,
    pub h_flat: f64,
    pub h_boosted: f64,
    pub deviation: f64,
    pub weight_deviation: f64,
}

/// Everything a study run produces for one δ.
#[derive(Clone, Debug)]
pub struct DeltaRun {
    pub instance: Instance,
    pub observables: Observables,
    pub fem: FemSolution,
    pub probes: Vec<ProbeRow>,
    pub boost: Vec<BoostRow>,
    pub timings: Vec<(String, f64)>,
}

#[derive(Clone, Debug)]
pub struct StudyResult {
    pub runs: Vec<DeltaRun>,
    pub trend: Vec<TrendRow>,
}

impl StudyResult {
    pub fn decreasing_fraction(&self) -> f64 {
        if self.trend.is_empty() {
            return 0.0;
        }
        self.trend.iter().filter(|t| t.decreasing).count() as f64 / self.trend.len() as f64
    }

    pub fn all_decreasing(&self) -> bool {
        !self.trend.is_empty() && self.trend.iter().all(|t| t.decreasing)
    }

    pub fn max_boost_deviation(&self) -> (f64, f64) {
        let rows = self.runs.iter().flat_map(|r| &r.boost);
        rows.fold((0.0f64, 0.0f64), |(h, w), b| (h.max(b.deviation), w.max(b.weight_deviation)))
    }
}

fn timed<T>(
    timings: &mut Vec<(String, f64)>,
    name: &str,
    f: impl FnOnce() -> Result<T, LabError>,
) -> Result<T, LabError> {
    let t = Instant::now();
    let out = f()?;
    timings.push((name.to_string(), t.elapsed().as_secs_f64()));
    Ok(out)
}

pub fn run_delta(cfg: &ExperimentConfig, delta: f64, jobs: usize) -> Result<DeltaRun, LabError> {
    let mut timings = Vec::new();
    let instance = timed(&mut timings, "build", || build_instance(cfg, delta))?;
    let observables = timed(&mut timings, "observable", || estimate_observables(cfg, &instance.fk, jobs))?;
    let fem =
        timed(&mut timings, "continuum", || Ok(solve_h(&cfg.surface, &instance.marked, delta / cfg.fem_refine)?))?;
    let mut probes = Vec::new();
    for (k, &p) in cfg.probes.iter().enumerate() {
        let (v, distance) = nearest_vertex(&instance.embedding, p);
        let z = instance.embedding.s(v);
        let position = [z.re, z.im];
        let h_continuum = fem.interpolate(position).ok_or(LabError::ProbeOutside(p))?;
        let h_discrete = observables.h[v];
        probes.push(ProbeRow {
            delta,
            probe: k,
            point: p,
            vertex: v,
            primal: instance.embedding.graph().is_primal(v),
            position,
            distance,
            h_discrete,
            stderr: observables.h_stderr[v],
            h_continuum,
            error: (h_discrete - h_continuum).abs(),
        });
    }
    let mut boost = Vec::new();
    if let Some(beta) = cfg.boost {
        boost = timed(&mut timings, "boost", || boosted_comparison(cfg, &instance, &observables, &probes, beta, jobs))?;
    }
    Ok(DeltaRun { instance, observables, fem, probes, boost, timings })
}

/// Reruns the estimator on the boosted embedding (same graph, corners and
/// seed) and compares H at the probe vertices.
fn boosted_comparison(
    cfg: &ExperimentConfig,
    instance: &Instance,
    observables: &Observables,
    probes: &[ProbeRow],
    beta: f64,
    jobs: usize,
) -> Result<Vec<BoostRow>, LabError> {
    let map = LorentzMap::boost_x(beta).map_err(|e| LabError::Embedding(e.to_string()))?;
    let boosted = instance.embedding.apply_isometry(&map).map_err(|e| LabError::Embedding(e.to_string()))?;
    let fk = FkDomain::with_conventions(
        &boosted,
        instance.boundary.clone(),
        cfg.sampler.edge_ratio,
        cfg.sampler.weight_formula,
    );
    let other = estimate_observables(cfg, &fk, jobs)?;
    let weight_deviation =
        fk.weights().iter().zip(instance.fk.weights()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    Ok(probes
        .iter()
        .map(|p| BoostRow {
            delta: instance.delta,
            probe: p.probe,
            vertex: p.vertex,
            h_flat: observables.h[p.vertex],
            h_boosted: other.h[p.vertex],
            deviation: (observables.h[p.vertex] - other.h[p.vertex]).abs(),
            weight_deviation,
        })
        .collect())
}

pub fn trend(runs: &[DeltaRun]) -> Vec<TrendRow> {
    let mut out = Vec::new();
    for w in runs.windows(2) {
        for (pc, pf) in w[0].probes.iter().zip(&w[1].probes) {
            let combined = pc.stderr.hypot(pf.stderr);
            out.push(TrendRow {
                probe: pc.probe,
                coarse: pc.delta,
                fine: pf.delta,
                e_coarse: pc.error,
                e_fine: pf.error,
                combined_stderr: combined,
                decreasing: pf.error < pc.error - 2.0 * combined,
            });
        }
    }
    out
}

/// Error of H^δ against the continuum h at every probe for every δ.
pub fn run_convergence_study(cfg: &ExperimentConfig, jobs: usize) -> Result<StudyResult, LabError> {
    let jobs = jobs.max(1);
    let runs = if jobs > 1 && cfg.deltas.len() > 1 {
        // one worker per δ, chains share what is left
        let per = (jobs / cfg.deltas.len()).max(1);
        std::thread::scope(|scope| {
            let handles: Vec<_> = cfg.deltas.iter().map(|&d| scope.spawn(move || run_delta(cfg, d, per))).collect();
            handles.into_iter().map(|h| h.join().expect("study worker panicked")).collect::<Result<Vec<_>, _>>()
        })?
    } else {
        cfg.deltas.iter().map(|&d| run_delta(cfg, d, 1)).collect::<Result<Vec<_>, _>>()?
    };
    let trend = trend(&runs);
    Ok(StudyResult { runs, trend })
}

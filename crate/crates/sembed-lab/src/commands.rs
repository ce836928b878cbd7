//! The CLI subcommands as library functions. Each writes into the output
//! directory and returns whether its checks passed.

use std::fs;
use std::path::PathBuf;

use sembed::continuum::{maximal_residual, solve_h};
use sembed::fkmodel::{trace_interface, Sampler};
use sembed::sembedding::write_embedding;

use crate::config::ExperimentConfig;
use crate::identity::{run_identity_suite, SuiteOptions};
use crate::manifest::RunManifest;
use crate::output::{write_fem, write_identity, write_observables, write_study, OutputWriter};
use crate::pipeline::{build_instance, estimate_observables, run_convergence_study, LabError};
use crate::render::render_embedding;
use crate::sampler_check::stationary_check;

/// Largest number of free edges the stationarity check enumerates.
pub const SAMPLE_CHECK_CAP: usize = 16;

/// Flags shared by every subcommand.
#[derive(Clone, Debug, Default)]
pub struct RunArgs {
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    /// human readable lines for the terminal
    pub summary: Vec<String>,
    pub out: PathBuf,
}

pub fn load(args: &RunArgs) -> Result<(ExperimentConfig, PathBuf), LabError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|source| LabError::Io { path: args.config.display().to_string(), source })?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(seed) = args.seed {
        cfg.sampler.seed = seed;
    }
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.out));
    Ok((cfg, out))
}

fn start(args: &RunArgs, command: &str) -> Result<(ExperimentConfig, OutputWriter), LabError> {
    let (cfg, out) = load(args)?;
    let w = OutputWriter::new(out, RunManifest::new(&cfg, command))?;
    Ok((cfg, w))
}

fn finish(w: OutputWriter, passed: bool, mut summary: Vec<String>) -> Result<Outcome, LabError> {
    let out = w.dir().to_path_buf();
    let m = w.finish()?;
    summary.push(format!("manifest {} in {}", m.config_hash, out.display()));
    Ok(Outcome { passed, summary, out })
}

/// Embeddings for every δ with their Dobrushin boundaries.
pub fn build(args: &RunArgs) -> Result<Outcome, LabError> {
    let (cfg, mut w) = start(args, "build")?;
    let mut summary = Vec::new();
    let mut passed = true;
    for (k, &delta) in cfg.deltas.iter().enumerate() {
        let inst = build_instance(&cfg, delta)?;
        let proper = inst.embedding.check_proper();
        passed &= proper.is_ok();
        summary.push(format!(
            "delta {delta}: {} vertices, {} quads, {} free edges, proper: {}",
            inst.embedding.graph().n_vertices(),
            inst.embedding.graph().quads().len(),
            inst.fk.n_free(),
            proper.map_or_else(|e| e.to_string(), |()| "yes".into())
        ));
        let text = write_embedding(&inst.embedding, Some(&inst.boundary));
        w.svg(&format!("embedding_{k}"), &format!("embedding_{k}.txt"), &text)?;
    }
    finish(w, passed, summary)
}

/// Identity suite for every δ; observable identities when under the enumeration cap.
pub fn validate(args: &RunArgs) -> Result<Outcome, LabError> {
    let (cfg, mut w) = start(args, "validate")?;
    let opts = SuiteOptions { seed: cfg.sampler.seed, exact_cap: cfg.sampler.exact_cap.max(12), ..Default::default() };
    let mut summary = Vec::new();
    let mut passed = true;
    for (k, &delta) in cfg.deltas.iter().enumerate() {
        let inst = build_instance(&cfg, delta)?;
        let report = run_identity_suite(&inst.embedding, Some(&inst.fk), None, &opts);
        passed &= report.passed();
        for c in &report.checks {
            summary.push(format!(
                "delta {delta} {:<24} {:>10.3e} <= {:.0e} {}",
                c.name,
                c.defect,
                c.tolerance,
                if c.passed { "ok" } else { "FAILED" }
            ));
        }
        write_identity(&mut w, k, &report)?;
    }
    finish(w, passed, summary)
}

/// Chain stationarity against enumeration (`samples` sweeps, 100 batches).
pub fn sample(args: &RunArgs) -> Result<Outcome, LabError> {
    let (cfg, mut w) = start(args, "sample")?;
    let mut summary = Vec::new();
    let mut passed = true;
    for (k, &delta) in cfg.deltas.iter().enumerate() {
        let inst = build_instance(&cfg, delta)?;
        if inst.fk.n_free() > SAMPLE_CHECK_CAP {
            summary.push(format!(
                "delta {delta}: {} free edges exceed the enumeration cap {SAMPLE_CHECK_CAP}; skipped",
                inst.fk.n_free()
            ));
            passed = false;
            continue;
        }
        let r = stationary_check(&inst.fk, cfg.sampler.kind, cfg.sampler.samples, 100, cfg.sampler.seed)?;
        passed &= r.passed();
        summary.push(format!(
            "delta {delta}: chi2 {:.1} on {} dof (threshold {:.1}), max |z| {:.2}",
            r.statistic,
            r.dof,
            r.threshold,
            r.max_z()
        ));
        let rows = r.cells.iter().map(|c| format!("{},{},{},{}", c.0, c.1, c.2, c.3));
        w.csv(&format!("sampler_{k}"), &format!("sampler_{k}.csv"), "mask,frequency,probability,stderr", rows)?;
    }
    finish(w, passed, summary)
}

/// F and H for every δ.
pub fn observable(args: &RunArgs) -> Result<Outcome, LabError> {
    let (cfg, mut w) = start(args, "observable")?;
    let mut summary = Vec::new();
    for (k, &delta) in cfg.deltas.iter().enumerate() {
        let inst = build_instance(&cfg, delta)?;
        let obs = estimate_observables(&cfg, &inst.fk, args.jobs)?;
        summary.push(format!(
            "delta {delta}: {} corners, {}, propagation defect {:.2} sigma",
            obs.f.len(),
            if obs.exact { "exact".to_string() } else { format!("{} samples", obs.samples) },
            obs.propagation_z
        ));
        write_observables(&mut w, k, &inst, &obs)?;
    }
    finish(w, true, summary)
}

/// Continuum h on the FEM mesh of every δ, probed at the configured points.
pub fn continuum(args: &RunArgs) -> Result<Outcome, LabError> {
    let (cfg, mut w) = start(args, "continuum")?;
    let mut summary = Vec::new();
    let mut passed = true;
    let mut rows = Vec::new();
    for &p in &cfg.probes {
        let r = maximal_residual(&cfg.surface, p)?;
        passed &= r <= 1e-10;
        summary.push(format!("maximal residual at {p:?}: {r:.2e}"));
    }
    for (k, &delta) in cfg.deltas.iter().enumerate() {
        let inst = build_instance(&cfg, delta)?;
        let fem = solve_h(&cfg.surface, &inst.marked, delta / cfg.fem_refine)?;
        let in_range = fem.values.iter().all(|&h| (-1e-9..=1.0 + 1e-9).contains(&h));
        passed &= in_range;
        summary.push(format!("delta {delta}: {} nodes, values in [0, 1]: {in_range}", fem.values.len()));
        for (j, &p) in cfg.probes.iter().enumerate() {
            let h = fem.interpolate(p).ok_or(LabError::ProbeOutside(p))?;
            rows.push(format!("{delta},{j},{},{},{h}", p[0], p[1]));
        }
        write_fem(&mut w, k, &fem)?;
    }
    w.csv("continuum", "continuum.csv", "delta,probe,x,y,h", rows)?;
    finish(w, passed, summary)
}

/// Full convergence study; passes when enough trends decrease and the
/// boosted copies agree.
pub fn study(args: &RunArgs) -> Result<Outcome, LabError> {
    let (cfg, mut w) = start(args, "study")?;
    let result = run_convergence_study(&cfg, args.jobs)?;
    write_study(&mut w, &result)?;
    let mut summary: Vec<String> = result
        .runs
        .iter()
        .flat_map(|r| &r.probes)
        .map(|p| {
            format!(
                "delta {:<8} probe {} ({}, {}): H {:.4} +- {:.4}, h {:.4}, error {:.4}",
                p.delta, p.probe, p.point[0], p.point[1], p.h_discrete, p.stderr, p.h_continuum, p.error
            )
        })
        .collect();
    let fraction = result.decreasing_fraction();
    let mut passed = fraction >= cfg.min_decreasing;
    summary.push(format!(
        "decreasing beyond 2 combined stderr: {:.0}% (required {:.0}%)",
        100.0 * fraction,
        100.0 * cfg.min_decreasing
    ));
    if cfg.boost.is_some() {
        let (dh, dw) = result.max_boost_deviation();
        passed &= dh <= 1e-12 && dw <= 1e-9;
        summary.push(format!("boosted copy: max |dH| {dh:.2e}, max |dw| {dw:.2e}"));
    }
    finish(w, passed, summary)
}

/// SVG of one embedding; `interface` adds a sampled interface. Fails on
/// overlapping quads.
pub fn render(args: &RunArgs, delta_index: usize, interface: bool) -> Result<Outcome, LabError> {
    let (cfg, mut w) = start(args, "render")?;
    let delta = *cfg
        .deltas
        .get(delta_index)
        .ok_or_else(|| LabError::Embedding(format!("no delta with index {delta_index}")))?;
    let inst = build_instance(&cfg, delta)?;
    let curve = if interface {
        let mut s = Sampler::new(&inst.fk, cfg.sampler.kind, cfg.sampler.seed, 0);
        for _ in 0..cfg.sampler.burn_in.max(1) {
            s.sweep();
        }
        Some(trace_interface(s.config(), &inst.fk)?)
    } else {
        None
    };
    let (svg, report) = render_embedding(&inst.embedding, Some(&inst.boundary), curve.as_ref());
    w.svg(&format!("render_{delta_index}"), &format!("embedding_{delta_index}.svg"), &svg)?;
    let summary = vec![format!(
        "delta {delta}: {} quads, {} corners, {} primal, {} dual, {} overlapping pairs",
        report.quads,
        report.corners,
        report.primal,
        report.dual,
        report.overlaps.len()
    )];
    finish(w, report.overlaps.is_empty(), summary)
}

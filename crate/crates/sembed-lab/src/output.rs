//! CSV and SVG emission through one writer that stamps every row with the
//! manifest hash.
//!
//! CSV schemas (all comma separated, header line first, last column
//! `manifest`):
//!
//! | file | columns |
//! |---|---|
//! | `errors.csv` | `delta,probe,x,y,vertex,primal,vx,vy,distance,h_discrete,stderr,h_continuum,error` |
//! | `trend.csv` | `probe,delta_coarse,delta_fine,e_coarse,e_fine,combined_stderr,decreasing` |
//! | `corners_k.csv` | `corner_id,x,y,re_f,im_f,stderr,n` |
//! | `vertices_k.csv` | `vertex_id,x,y,H,stderr` |
//! | `fem_k.csv` | `node_id,x,y,h` |
//! | `boost.csv` | `delta,probe,vertex,h_flat,h_boosted,deviation,weight_deviation` |
//! | `identity_k.csv` | `check,defect,tolerance,passed,location` |
//! | `sampler_k.csv` | `mask,frequency,probability,stderr` |
//! | `continuum.csv` | `delta,probe,x,y,h` |
//!
//! `k` is the position of δ in the config's delta list.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::identity::IdentityReport;
use crate::manifest::RunManifest;
use sembed::continuum::FemSolution;

use crate::pipeline::{Instance, LabError, Observables, StudyResult};
use crate::plot::error_plot;

/// Owns the output directory; all files go through it.
#[derive(Debug)]
pub struct OutputWriter {
    dir: PathBuf,
    manifest: RunManifest,
}

impl OutputWriter {
    pub fn new(dir: impl Into<PathBuf>, manifest: RunManifest) -> Result<Self, LabError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| LabError::Io { path: dir.display().to_string(), source })?;
        Ok(Self { dir, manifest })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    pub fn manifest_mut(&mut self) -> &mut RunManifest {
        &mut self.manifest
    }

    fn write(&mut self, label: &str, name: &str, content: &str) -> Result<PathBuf, LabError> {
        let path = self.dir.join(name);
        fs::write(&path, content).map_err(|source| LabError::Io { path: path.display().to_string(), source })?;
        self.manifest.files.push((label.to_string(), name.to_string()));
        Ok(path)
    }

    /// `header` and `rows` without the manifest column; it is appended here.
    pub fn csv<I>(&mut self, label: &str, name: &str, header: &str, rows: I) -> Result<PathBuf, LabError>
    where
        I: IntoIterator<Item = String>,
    {
        let hash = self.manifest.config_hash.clone();
        let mut s = format!("{header},manifest\n");
        for r in rows {
            let _ = writeln!(s, "{r},{hash}");
        }
        self.write(label, name, &s)
    }

    pub fn svg(&mut self, label: &str, name: &str, content: &str) -> Result<PathBuf, LabError> {
        self.write(label, name, content)
    }

    /// Writes `manifest.txt` last so it lists every file.
    pub fn finish(self) -> Result<RunManifest, LabError> {
        let path = self.dir.join("manifest.txt");
        fs::write(&path, self.manifest.to_text())
            .map_err(|source| LabError::Io { path: path.display().to_string(), source })?;
        Ok(self.manifest)
    }
}

pub fn write_study(w: &mut OutputWriter, study: &StudyResult) -> Result<(), LabError> {
    let rows = study.runs.iter().flat_map(|r| &r.probes).map(|p| {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.delta,
            p.probe,
            p.point[0],
            p.point[1],
            p.vertex,
            p.primal,
            p.position[0],
            p.position[1],
            p.distance,
            p.h_discrete,
            p.stderr,
            p.h_continuum,
            p.error
        )
    });
    w.csv(
        "errors",
        "errors.csv",
        "delta,probe,x,y,vertex,primal,vx,vy,distance,h_discrete,stderr,h_continuum,error",
        rows,
    )?;
    let rows = study.trend.iter().map(|t| {
        format!(
            "{},{},{},{},{},{},{}",
            t.probe, t.coarse, t.fine, t.e_coarse, t.e_fine, t.combined_stderr, t.decreasing
        )
    });
    w.csv("trend", "trend.csv", "probe,delta_coarse,delta_fine,e_coarse,e_fine,combined_stderr,decreasing", rows)?;
    for (k, run) in study.runs.iter().enumerate() {
        write_observables(w, k, &run.instance, &run.observables)?;
        write_fem(w, k, &run.fem)?;
    }
    if study.runs.iter().any(|r| !r.boost.is_empty()) {
        let rows = study.runs.iter().flat_map(|r| &r.boost).map(|b| {
            format!(
                "{},{},{},{},{},{:e},{:e}",
                b.delta, b.probe, b.vertex, b.h_flat, b.h_boosted, b.deviation, b.weight_deviation
            )
        });
        w.csv("boost", "boost.csv", "delta,probe,vertex,h_flat,h_boosted,deviation,weight_deviation", rows)?;
    }
    w.svg("plot", "errors.svg", &error_plot(study))?;
    for run in &study.runs {
        for (stage, t) in &run.timings {
            w.manifest_mut().timings.push((format!("{}.{stage}", run.instance.delta), *t));
        }
    }
    Ok(())
}

pub fn write_identity(w: &mut OutputWriter, k: usize, report: &IdentityReport) -> Result<(), LabError> {
    let csv = report.to_csv();
    let mut lines = csv.lines();
    let header = lines.next().unwrap_or_default().to_string();
    let rows: Vec<String> = lines.map(str::to_string).collect();
    w.csv(&format!("identity_{k}"), &format!("identity_{k}.csv"), &header, rows)?;
    Ok(())
}

/// `corners_k.csv` and `vertices_k.csv`.
pub fn write_observables(
    w: &mut OutputWriter,
    k: usize,
    instance: &Instance,
    obs: &Observables,
) -> Result<(), LabError> {
    let (emb, fk) = (&instance.embedding, &instance.fk);
    let rows = (0..fk.n_corners()).map(|c| {
        let (u, v) = fk.corner(c);
        let m = (emb.s(u) + emb.s(v)) / 2.0;
        format!("{c},{},{},{},{},{},{}", m.re, m.im, obs.f[c].re, obs.f[c].im, obs.f_stderr[c], obs.samples)
    });
    w.csv(&format!("corners_{k}"), &format!("corners_{k}.csv"), "corner_id,x,y,re_f,im_f,stderr,n", rows)?;
    let rows = (0..emb.graph().n_vertices()).map(|v| {
        let z = emb.s(v);
        format!("{v},{},{},{},{}", z.re, z.im, obs.h[v], obs.h_stderr[v])
    });
    w.csv(&format!("vertices_{k}"), &format!("vertices_{k}.csv"), "vertex_id,x,y,H,stderr", rows)?;
    Ok(())
}

/// `fem_k.csv`.
pub fn write_fem(w: &mut OutputWriter, k: usize, fem: &FemSolution) -> Result<(), LabError> {
    let text = fem.to_csv();
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("node_id,x,y,h").to_string();
    let rows: Vec<String> = lines.map(str::to_string).collect();
    w.csv(&format!("fem_{k}"), &format!("fem_{k}.csv"), &header, rows)?;
    Ok(())
}

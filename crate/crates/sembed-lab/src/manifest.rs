//! Run manifests: what produced a directory of outputs.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

/// Tolerances applied by the pipelines, recorded with every run.
pub const TOLERANCES: &[(&str, f64)] = &[
    ("kernel", 1e-10),
    ("laplacian_symmetry", 1e-10),
    ("laplacian_imag", 1e-10),
    ("laplacian_lorentz_rel", 1e-8),
    ("propagation_exact", 1e-12),
    ("reconstruction", 1e-10),
    ("h_boundary", 1e-10),
    ("discrete_integral", 1e-10),
    ("s_positivity", 1e-10),
    ("propagation_mc_sigma", 6.0),
    ("trend_stderr_factor", 2.0),
    ("boost_h", 1e-12),
    ("boost_weights", 1e-9),
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    pub command: String,
    pub timings: Vec<(String, f64)>,
    pub edge_ratio: String,
    pub weight_formula: String,
    /// (label, relative path) of every file written
    pub files: Vec<(String, String)>,
}

/// First 16 hex digits of the SHA-256 of the canonical config text.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let digest = Sha256::digest(cfg.canonical().as_bytes());
    digest.iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl RunManifest {
    pub fn new(cfg: &ExperimentConfig, command: &str) -> Self {
        Self {
            config_hash: config_hash(cfg),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            timings: Vec::new(),
            edge_ratio: cfg.sampler.edge_ratio.to_string(),
            weight_formula: cfg.sampler.weight_formula.to_string(),
            files: Vec::new(),
        }
    }

    /// key=value text, one entry per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "config_hash={}", self.config_hash);
        let _ = writeln!(s, "tool_version={}", self.tool_version);
        let _ = writeln!(s, "command={}", self.command);
        let _ = writeln!(s, "edge_ratio={}", self.edge_ratio);
        let _ = writeln!(s, "weight_formula={}", self.weight_formula);
        for (k, v) in TOLERANCES {
            let _ = writeln!(s, "tolerance.{k}={v:e}");
        }
        for (k, v) in &self.timings {
            let _ = writeln!(s, "timing.{k}={v:.3}");
        }
        for (k, v) in &self.files {
            let _ = writeln!(s, "file.{k}={v}");
        }
        s
    }
}

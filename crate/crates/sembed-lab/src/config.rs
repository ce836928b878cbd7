//! Experiment configuration: flat `key = value` text with `[section]` headers.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use sembed::continuum::boundary_distance;
use sembed::fkmodel::{EdgeRatio, SamplerKind, WeightFormula};
use sembed::sembedding::{Domain, SurfaceKind, SurfaceSpec};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing key [{section}] {key}")]
    Missing { section: String, key: String },
    #[error("[{section}] {key}: {msg}")]
    Value { section: String, key: String, msg: String },
    #[error("unknown key [{section}] {key}")]
    Unknown { section: String, key: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LatticeKind {
    /// square lattice of the rectangle, one quad per cell
    Square,
    /// maximal triangulation of the surface
    Triangulated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerSettings {
    pub seed: u64,
    pub samples: usize,
    pub chains: usize,
    pub batches: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub kind: SamplerKind,
    pub edge_ratio: EdgeRatio,
    pub weight_formula: WeightFormula,
    /// use exact enumeration when the domain has at most this many free edges
    pub exact_cap: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub surface: SurfaceSpec,
    pub lattice: LatticeKind,
    /// target positions of the marked points a and b
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub deltas: Vec<f64>,
    pub sampler: SamplerSettings,
    pub probes: Vec<[f64; 2]>,
    /// FEM mesh size as a fraction of δ
    pub fem_refine: f64,
    /// boost speed of the tilted copy compared against each flat run
    pub boost: Option<f64>,
    /// fraction of probe trends that must decrease for the study to pass
    pub min_decreasing: f64,
    pub out: String,
}

type Sections = BTreeMap<String, BTreeMap<String, (usize, String)>>;

fn parse_sections(text: &str) -> Result<Sections, ConfigError> {
    let mut out: Sections = BTreeMap::new();
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Syntax { line: i + 1, msg: "unterminated section header".into() })?;
            section = name.trim().to_string();
            out.entry(section.clone()).or_default();
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax { line: i + 1, msg: format!("expected key = value, got {line:?}") })?;
        if section.is_empty() {
            return Err(ConfigError::Syntax { line: i + 1, msg: "key outside of a section".into() });
        }
        let prev = out.entry(section.clone()).or_default().insert(k.trim().to_string(), (i + 1, v.trim().to_string()));
        if prev.is_some() {
            return Err(ConfigError::Syntax { line: i + 1, msg: format!("duplicate key {}", k.trim()) });
        }
    }
    Ok(out)
}

/// Number with optional fraction `p/q` and `pi` suffix, e.g. `1/16`, `0.5pi`.
pub fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    if let Some(x) = s.strip_suffix("pi") {
        let x = x.trim();
        return Ok(if x.is_empty() { PI } else { parse_number(x)? * PI });
    }
    if let Some((p, q)) = s.split_once('/') {
        let (p, q) = (parse_number(p)?, parse_number(q)?);
        if q == 0.0 {
            return Err(format!("division by zero in {s:?}"));
        }
        return Ok(p / q);
    }
    s.parse::<f64>().map_err(|_| format!("not a number: {s:?}"))
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(format!("expected two coordinates, got {s:?}"));
    }
    Ok([parse_number(parts[0])?, parse_number(parts[1])?])
}

struct Reader {
    sections: Sections,
    used: Vec<(String, String)>,
}

impl Reader {
    fn raw(&mut self, section: &str, key: &str) -> Option<String> {
        let v = self.sections.get(section)?.get(key)?.1.clone();
        self.used.push((section.into(), key.into()));
        Some(v)
    }

    fn get<T>(
        &mut self,
        section: &str,
        key: &str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<Option<T>, ConfigError> {
        match self.raw(section, key) {
            None => Ok(None),
            Some(v) => {
                parse(&v).map(Some).map_err(|msg| ConfigError::Value { section: section.into(), key: key.into(), msg })
            }
        }
    }

    fn require<T>(
        &mut self,
        section: &str,
        key: &str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<T, ConfigError> {
        self.get(section, key, parse)?.ok_or_else(|| ConfigError::Missing { section: section.into(), key: key.into() })
    }

    fn check_unused(&self) -> Result<(), ConfigError> {
        for (s, keys) in &self.sections {
            for k in keys.keys() {
                if !self.used.iter().any(|(us, uk)| us == s && uk == k) {
                    return Err(ConfigError::Unknown { section: s.clone(), key: k.clone() });
                }
            }
        }
        Ok(())
    }
}

fn num(s: &str) -> Result<f64, String> {
    parse_number(s)
}

fn count(s: &str) -> Result<usize, String> {
    let x = parse_number(s)?;
    if x < 0.0 || x.fract() != 0.0 || x > 1e15 {
        return Err(format!("expected a non-negative integer, got {s:?}"));
    }
    Ok(x as usize)
}

fn text(s: &str) -> Result<String, String> {
    Ok(s.to_string())
}

impl ExperimentConfig {
    pub fn parse(text_in: &str) -> Result<Self, ConfigError> {
        let mut r = Reader { sections: parse_sections(text_in)?, used: Vec::new() };
        let name = r.get("run", "name", text)?.unwrap_or_else(|| "experiment".into());
        let seed = r.require("run", "seed", |s| s.parse::<u64>().map_err(|e| e.to_string()))?;
        let out = r.get("run", "out", text)?.unwrap_or_else(|| "out".into());

        let shape = r.require("domain", "shape", text)?;
        let domain = match shape.as_str() {
            "rect" => Domain::Rect {
                x0: r.require("domain", "x0", num)?,
                x1: r.require("domain", "x1", num)?,
                y0: r.require("domain", "y0", num)?,
                y1: r.require("domain", "y1", num)?,
            },
            "sector" => Domain::AnnularSector {
                r0: r.require("domain", "r0", num)?,
                r1: r.require("domain", "r1", num)?,
                phi0: r.require("domain", "phi0", num)?,
                phi1: r.require("domain", "phi1", num)?,
            },
            other => {
                return Err(ConfigError::Value {
                    section: "domain".into(),
                    key: "shape".into(),
                    msg: format!("unknown shape {other:?} (rect or sector)"),
                })
            }
        };
        let a = r.require("domain", "a", parse_point)?;
        let b = r.require("domain", "b", parse_point)?;

        let kind = match r.require("surface", "kind", text)?.as_str() {
            "flat" => SurfaceKind::Flat,
            "tilted" => SurfaceKind::Tilted { a: r.require("surface", "a", num)?, b: r.require("surface", "b", num)? },
            "catenoid" => SurfaceKind::Catenoid { c: r.require("surface", "c", num)? },
            other => {
                return Err(ConfigError::Value {
                    section: "surface".into(),
                    key: "kind".into(),
                    msg: format!("unknown surface {other:?} (flat, tilted or catenoid)"),
                })
            }
        };
        let surface = SurfaceSpec::new(kind, domain).map_err(|e| ConfigError::Invalid(e.to_string()))?;

        let lattice = match r.require("lattice", "kind", text)?.as_str() {
            "square" => LatticeKind::Square,
            "triangulated" => LatticeKind::Triangulated,
            other => {
                return Err(ConfigError::Value {
                    section: "lattice".into(),
                    key: "kind".into(),
                    msg: format!("unknown lattice {other:?} (square or triangulated)"),
                })
            }
        };
        let deltas =
            r.require("lattice", "deltas", |s| s.split(',').map(parse_number).collect::<Result<Vec<_>, _>>())?;

        let sampler = SamplerSettings {
            seed,
            samples: r.get("sampler", "samples", count)?.unwrap_or(100_000),
            chains: r.get("sampler", "chains", count)?.unwrap_or(4),
            batches: r.get("sampler", "batches", count)?.unwrap_or(8),
            burn_in: r.get("sampler", "burn_in", count)?.unwrap_or(100),
            thin: r.get("sampler", "thin", count)?.unwrap_or(1),
            kind: r.get("sampler", "kind", |s| s.parse())?.unwrap_or_default(),
            edge_ratio: r.get("sampler", "edge_ratio", |s| s.parse())?.unwrap_or_default(),
            weight_formula: r.get("sampler", "weight_formula", |s| s.parse())?.unwrap_or_default(),
            exact_cap: r.get("sampler", "exact_cap", count)?.unwrap_or(0),
        };
        let probes = r.require("probes", "points", |s| s.split(';').map(parse_point).collect::<Result<Vec<_>, _>>())?;
        let fem_refine = r.get("continuum", "fem_refine", num)?.unwrap_or(4.0);
        let boost = r.get("study", "boost", num)?;
        let min_decreasing = r.get("study", "min_decreasing", num)?.unwrap_or(1.0);
        r.check_unused()?;

        let cfg =
            Self { name, surface, lattice, a, b, deltas, sampler, probes, fem_refine, boost, min_decreasing, out };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.deltas.is_empty() {
            return bad("at least one delta is required".into());
        }
        if self.deltas.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return bad("deltas must be positive".into());
        }
        if self.deltas.windows(2).any(|w| w[1] >= w[0]) {
            return bad("deltas must be strictly decreasing".into());
        }
        if self.probes.is_empty() {
            return bad("at least one probe is required".into());
        }
        let margin = 2.0 * self.deltas[0];
        for p in &self.probes {
            if !self.surface.domain.contains(*p) || boundary_distance(&self.surface.domain, *p) < margin - 1e-12 {
                return bad(format!("probe {p:?} is closer than 2·max delta = {margin} to the boundary"));
            }
        }
        if self.lattice == LatticeKind::Square {
            let Domain::Rect { x0, x1, y0, y1 } = self.surface.domain else {
                return bad("square lattices need a rect domain".into());
            };
            if self.surface.kind != SurfaceKind::Flat {
                return bad("square lattices are flat; tilted runs are obtained with [study] boost".into());
            }
            for &d in &self.deltas {
                for len in [x1 - x0, y1 - y0] {
                    let n = (len / d).round();
                    if n < 1.0 || (n * d - len).abs() > 1e-9 * len {
                        return bad(format!("delta {d} does not divide the rectangle side {len}"));
                    }
                }
            }
        }
        if self.sampler.samples == 0 || self.sampler.chains == 0 || self.sampler.batches == 0 || self.sampler.thin == 0
        {
            return bad("samples, chains, batches and thin must be positive".into());
        }
        if self.fem_refine.is_nan() || self.fem_refine < 1.0 {
            return bad("fem_refine must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.min_decreasing) {
            return bad(format!("min_decreasing = {} must lie in [0, 1]", self.min_decreasing));
        }
        if let Some(beta) = self.boost {
            if !(0.0..1.0).contains(&beta.abs()) {
                return bad(format!("boost speed {beta} must satisfy |β| < 1"));
            }
            if self.surface.kind != SurfaceKind::Flat {
                return bad("boost comparisons start from a flat surface".into());
            }
        }
        Ok(())
    }

    /// Canonical text of everything that influences the outputs.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "name={}", self.name);
        let _ = writeln!(s, "surface={:?}", self.surface);
        let _ = writeln!(s, "lattice={:?}", self.lattice);
        let _ = writeln!(s, "a={:?}", self.a);
        let _ = writeln!(s, "b={:?}", self.b);
        let _ = writeln!(s, "deltas={:?}", self.deltas);
        let sm = &self.sampler;
        let _ = writeln!(
            s,
            "seed={} samples={} chains={} batches={} burn_in={} thin={} kind={} edge_ratio={} weight_formula={} exact_cap={}",
            sm.seed, sm.samples, sm.chains, sm.batches, sm.burn_in, sm.thin, sm.kind, sm.edge_ratio, sm.weight_formula, sm.exact_cap
        );
        let _ = writeln!(s, "probes={:?}", self.probes);
        let _ = writeln!(s, "fem_refine={:?}", self.fem_refine);
        let _ = writeln!(s, "boost={:?}", self.boost);
        let _ = writeln!(s, "min_decreasing={:?}", self.min_decreasing);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FLAT: &str = "
[run]
name = flat
seed = 7
[surface]
kind = flat
[domain]
shape = rect
x0 = 0
x1 = 1
y0 = 0
y1 = 1
a = 0.5 0
b = 0.5 1
[lattice]
kind = square
deltas = 1/8, 1/16
[sampler]
samples = 1000
edge_ratio = as_printed
[probes]
points = 0.5 0.5; 0.25 0.5  # centre and left
";

    #[test]
    fn parses_a_flat_config() {
        let c = ExperimentConfig::parse(FLAT).unwrap();
        assert_eq!(c.deltas, vec![0.125, 0.0625]);
        assert_eq!(c.probes, vec![[0.5, 0.5], [0.25, 0.5]]);
        assert_eq!(c.sampler.samples, 1000);
        assert_eq!(c.sampler.seed, 7);
        assert_eq!(c.sampler.edge_ratio, EdgeRatio::AsPrinted);
        assert_eq!(c.lattice, LatticeKind::Square);
    }

    #[test]
    fn numbers() {
        assert_eq!(parse_number("1/4"), Ok(0.25));
        assert_eq!(parse_number("0.5pi"), Ok(PI / 2.0));
        assert_eq!(parse_number("pi"), Ok(PI));
        assert!(parse_number("1/0").is_err());
        assert!(parse_number("x").is_err());
    }

    #[test]
    fn rejects_bad_configs() {
        let cases = [
            FLAT.replace("deltas = 1/8, 1/16", "deltas = 1/16, 1/8"),
            FLAT.replace("seed = 7", ""),
            FLAT.replace("0.25 0.5", "0.1 0.5"),
            FLAT.replace("deltas = 1/8, 1/16", "deltas = 0.3"),
            FLAT.replace("samples = 1000", "sampels = 1000"),
            FLAT.replace("kind = square", "kind = hexagonal"),
            FLAT.replace("[probes]", "[probes"),
        ];
        for c in cases {
            assert!(ExperimentConfig::parse(&c).is_err(), "{c}");
        }
    }

    #[test]
    fn canonical_text_tracks_the_seed() {
        let a = ExperimentConfig::parse(FLAT).unwrap();
        let mut b = a.clone();
        b.sampler.seed = 8;
        assert_ne!(a.canonical(), b.canonical());
        b.out = "elsewhere".into();
        b.sampler.seed = 7;
        assert_eq!(a.canonical(), b.canonical());
    }
}

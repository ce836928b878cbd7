//! Fixed set of small Dobrushin domains, each with at most 12 free edges,
//! on which observables can be enumerated exactly.

use std::f64::consts::FRAC_PI_2;

use sembed::fkmodel::{EdgeRatio, FkDomain, WeightFormula};
use sembed::sembedding::{build_maximal_triangulation, Domain, LorentzMap, SEmbedding, SurfaceKind, SurfaceSpec};
use sembed::C64;

use crate::pipeline::{marked_corners, LabError};

pub struct CatalogEntry {
    pub name: &'static str,
    pub embedding: SEmbedding,
    pub domain: FkDomain,
}

fn entry(
    name: &'static str,
    embedding: SEmbedding,
    marks: Option<([f64; 2], [f64; 2])>,
) -> Result<CatalogEntry, LabError> {
    let boundary = match marks {
        Some((a, b)) => marked_corners(&embedding, a, b)?,
        None => sembed::quadgraph::DobrushinBoundary::balanced(embedding.graph())?,
    };
    let domain = FkDomain::with_conventions(&embedding, boundary, EdgeRatio::default(), WeightFormula::default());
    Ok(CatalogEntry { name, embedding, domain })
}

fn triangulated(kind: SurfaceKind, domain: Domain, delta: f64) -> Result<SEmbedding, LabError> {
    let spec = SurfaceSpec::new(kind, domain).map_err(|e| LabError::Embedding(e.to_string()))?;
    build_maximal_triangulation(&spec, delta).map(|m| m.embedding).map_err(|e| LabError::Embedding(e.to_string()))
}

/// Ten domains: square lattices (flat and on a tilted plane) and maximal
/// triangulations of flat, tilted and catenoid pieces.
pub fn small_catalog() -> Result<Vec<CatalogEntry>, LabError> {
    let o = C64::new(0.0, 0.0);
    let lattice = |w, h| SEmbedding::flat_rect_lattice(w, h, 1.0, o);
    let unit = Domain::Rect { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 };
    let sector = Domain::AnnularSector { r0: 0.5, r1: 1.5, phi0: 0.0, phi1: FRAC_PI_2 };
    let boost = LorentzMap::boost(0.3, -0.2).map_err(|e| LabError::Embedding(e.to_string()))?;
    let tilted = lattice(3, 3).apply_isometry(&boost).map_err(|e| LabError::Embedding(e.to_string()))?;
    Ok(vec![
        entry("lattice 2x1", lattice(2, 1), None)?,
        entry("lattice 2x2", lattice(2, 2), None)?,
        entry("lattice 3x2", lattice(3, 2), None)?,
        entry("lattice 3x3", lattice(3, 3), None)?,
        entry("lattice 4x3 off-centre marks", lattice(4, 3), Some(([1.0, 0.0], [4.0, 2.5])))?,
        entry("boosted lattice 3x3", tilted, None)?,
        entry("flat triangulation", triangulated(SurfaceKind::Flat, unit, 0.4)?, None)?,
        entry("tilted triangulation", triangulated(SurfaceKind::Tilted { a: 0.3, b: -0.2 }, unit, 0.5)?, None)?,
        entry("catenoid triangulation 0.3", triangulated(SurfaceKind::Catenoid { c: 1.0 }, sector, 0.3)?, None)?,
        entry("catenoid triangulation 0.25", triangulated(SurfaceKind::Catenoid { c: 1.0 }, sector, 0.25)?, None)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_has_ten_small_domains() {
        let c = small_catalog().unwrap();
        assert_eq!(c.len(), 10);
        for e in &c {
            assert!((1..=12).contains(&e.domain.n_free()), "{}: {}", e.name, e.domain.n_free());
            assert!(e.embedding.check_proper().is_ok(), "{}", e.name);
        }
        assert!(c.iter().any(|e| e.domain.n_free() == 12));
    }

    #[test]
    fn exact_identities_hold_across_the_catalog() {
        use crate::identity::{run_identity_suite, SuiteOptions};
        for e in small_catalog().unwrap() {
            let r = run_identity_suite(
                &e.embedding,
                Some(&e.domain),
                None,
                &SuiteOptions { boosts: 4, ..Default::default() },
            );
            assert!(r.passed(), "{}\n{}", e.name, r.to_csv());
            assert!(r.get("ds_h").is_some(), "{}", e.name);
        }
    }
}

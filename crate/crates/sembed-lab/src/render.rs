//! SVG drawing of an embedding: quads, incircles, • and ○ vertices, the
//! boundary arcs and optionally an interface.

use std::fmt::Write as _;

use sembed::fkmodel::InterfaceCurve;
use sembed::quadgraph::DobrushinBoundary;
use sembed::sembedding::SEmbedding;
use sembed::C64;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RenderReport {
    pub quads: usize,
    pub corners: usize,
    pub primal: usize,
    pub dual: usize,
    /// pairs of quads whose interiors intersect
    pub overlaps: Vec<(usize, usize)>,
}

/// Largest overlap depth of two convex polygons along their edge normals,
/// negative when a separating axis exists.
fn overlap_depth(p: &[C64], q: &[C64]) -> f64 {
    let mut depth = f64::INFINITY;
    for poly in [p, q] {
        for k in 0..poly.len() {
            let e = poly[(k + 1) % poly.len()] - poly[k];
            let n = C64::new(-e.im, e.re) / e.norm();
            let proj = |s: &[C64]| {
                s.iter()
                    .map(|z| z.re * n.re + z.im * n.im)
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
            };
            let ((a0, a1), (b0, b1)) = (proj(p), proj(q));
            depth = depth.min(a1.min(b1) - a0.max(b0));
        }
    }
    depth
}

/// Quad pairs that overlap by more than `1e-9·δ`, found by bucketing the
/// quads on a grid of cell size δ.
pub fn find_overlaps(emb: &SEmbedding) -> Vec<(usize, usize)> {
    let g = emb.graph();
    let polys: Vec<Vec<C64>> = g.quads().iter().map(|q| q.iter().map(|&v| emb.s(v)).collect()).collect();
    let h = polys
        .iter()
        .flat_map(|p| (0..4).map(move |k| (p[(k + 1) % 4] - p[k]).norm()))
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let cell = |z: C64| ((z.re / h).floor() as i64, (z.im / h).floor() as i64);
    let mut grid: std::collections::BTreeMap<(i64, i64), Vec<usize>> = Default::default();
    let boxes: Vec<_> = polys
        .iter()
        .map(|p| {
            let (lo, hi) = p.iter().fold(((i64::MAX, i64::MAX), (i64::MIN, i64::MIN)), |(lo, hi), &z| {
                let c = cell(z);
                ((lo.0.min(c.0), lo.1.min(c.1)), (hi.0.max(c.0), hi.1.max(c.1)))
            });
            (lo, hi)
        })
        .collect();
    for (q, (lo, hi)) in boxes.iter().enumerate() {
        for i in lo.0..=hi.0 {
            for j in lo.1..=hi.1 {
                grid.entry((i, j)).or_default().push(q);
            }
        }
    }
    let mut out = std::collections::BTreeSet::new();
    for bucket in grid.values() {
        for (k, &p) in bucket.iter().enumerate() {
            for &q in &bucket[k + 1..] {
                if overlap_depth(&polys[p], &polys[q]) > 1e-9 * h {
                    out.insert((p.min(q), p.max(q)));
                }
            }
        }
    }
    out.into_iter().collect()
}

pub fn render_embedding(
    emb: &SEmbedding,
    boundary: Option<&DobrushinBoundary>,
    interface: Option<&InterfaceCurve>,
) -> (String, RenderReport) {
    let g = emb.graph();
    let pts = emb.positions();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for z in pts {
        (x0, x1, y0, y1) = (x0.min(z.re), x1.max(z.re), y0.min(z.im), y1.max(z.im));
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-12);
    let size = 640.0;
    let pad = 20.0;
    let scale = (size - 2.0 * pad) / span;
    let tx = |z: C64| (pad + (z.re - x0) * scale, size - pad - (z.im - y0) * scale);
    let r = (emb.delta() * scale * 0.08).clamp(1.0, 5.0);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">"#);
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>"#);
    for (q, quad) in g.quads().iter().enumerate() {
        let path: Vec<String> = quad
            .iter()
            .map(|&v| {
                let (x, y) = tx(pts[v]);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ =
            writeln!(s, r##"<polygon points="{}" fill="#f4f4f4" stroke="#888" stroke-width="0.6"/>"##, path.join(" "));
        let (cx, cy) = tx(emb.quad_center(q));
        let _ = writeln!(
            s,
            r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="none" stroke="#9ab" stroke-width="0.5"/>"##,
            emb.inradius(q) * scale
        );
    }
    if let Some(b) = boundary {
        for (arc, color) in [(&b.primal_arc, "#c00"), (&b.dual_arc, "#06c")] {
            for &v in arc.iter() {
                let (x, y) = tx(pts[v]);
                let _ = writeln!(
                    s,
                    r#"<circle cx="{x:.2}" cy="{y:.2}" r="{:.2}" fill="{color}" opacity="0.35"/>"#,
                    2.2 * r
                );
            }
        }
        for (c, label) in [(b.a, "a"), (b.b, "b")] {
            let k = g.corner(c);
            let (x, y) = tx((pts[k.primal] + pts[k.dual]) / 2.0);
            let _ =
                writeln!(s, r#"<text x="{x:.2}" y="{y:.2}" font-size="14" font-family="sans-serif">{label}</text>"#);
        }
    }
    if let Some(curve) = interface {
        let path: Vec<String> = curve
            .corners
            .iter()
            .map(|&c| {
                let k = g.corner(c);
                let (x, y) = tx((pts[k.primal] + pts[k.dual]) / 2.0);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ =
            writeln!(s, r##"<polyline points="{}" fill="none" stroke="#e60" stroke-width="1.5"/>"##, path.join(" "));
    }
    for (v, &z) in pts.iter().enumerate() {
        let (x, y) = tx(z);
        if g.is_primal(v) {
            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r:.2}" fill="black"/>"#);
        } else {
            let _ = writeln!(
                s,
                r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r:.2}" fill="white" stroke="black" stroke-width="0.8"/>"#
            );
        }
    }
    s.push_str("</svg>\n");
    let report = RenderReport {
        quads: g.quads().len(),
        corners: g.corners().len(),
        primal: g.n_primal(),
        dual: g.n_dual(),
        overlaps: find_overlaps(emb),
    };
    (s, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_lattice_counts() {
        let e = SEmbedding::flat_rect_lattice(2, 2, 1.0, C64::new(0.0, 0.0));
        let (svg, rep) = render_embedding(&e, None, None);
        assert_eq!(rep.quads, 4);
        assert_eq!(rep.corners, 12);
        assert!(rep.overlaps.is_empty());
        assert_eq!(svg.matches("<polygon").count(), 4);
        assert_eq!(svg.matches(r#"fill="black""#).count(), rep.primal);
    }

    #[test]
    fn folded_quads_are_reported() {
        let a = [C64::new(0.0, 0.0), C64::new(2.0, 0.0), C64::new(2.0, 2.0), C64::new(0.0, 2.0)];
        let b: Vec<C64> = a.iter().map(|z| z + C64::new(1.0, 1.0)).collect();
        let c: Vec<C64> = a.iter().map(|z| z + C64::new(2.0, 0.0)).collect();
        assert!(overlap_depth(&a, &b) > 0.5);
        assert!(overlap_depth(&a, &c).abs() < 1e-12);
    }
}

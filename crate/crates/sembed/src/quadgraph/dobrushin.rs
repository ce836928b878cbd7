use super::QuadGraph;

/// Wired primal arc `(b a)•`, free dual arc `(a b)°` and the corners `a`, `b`
/// joining their endpoints.
///
/// Along the counterclockwise boundary cycle the vertices read
/// `v₁•, …, vₙ•` (primal arc, interleaved with dual vertices that belong to
/// neither arc), then `a = (vₙ•, w₁°)`, then `w₁°, …, w_{n'}°`, then
/// `b = (v₁•, w_{n'}°)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DobrushinBoundary {
    pub primal_arc: Vec<usize>,
    pub dual_arc: Vec<usize>,
    pub a: usize,
    pub b: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DobrushinError {
    #[error("corner {0} is not a boundary corner")]
    NotBoundary(usize),
    #[error("corner {0} has the wrong orientation along the boundary cycle")]
    Orientation(usize),
    #[error("a and b must be distinct corners")]
    Coincident,
    #[error("no corner joins vertices {0} and {1}")]
    NoCorner(usize, usize),
    #[error("declared arcs do not match the arcs implied by a and b")]
    ArcMismatch,
}

impl DobrushinBoundary {
    /// Derives both arcs from the marked corners.
    ///
    /// `a` must be traversed primal-then-dual and `b` dual-then-primal by the
    /// counterclockwise boundary cycle.
    pub fn new(graph: &QuadGraph, a: usize, b: usize) -> Result<Self, DobrushinError> {
        if a == b {
            return Err(DobrushinError::Coincident);
        }
        for c in [a, b] {
            if c >= graph.corners().len() || !graph.is_boundary_corner(c) {
                return Err(DobrushinError::NotBoundary(c));
            }
        }
        let cycle = graph.boundary_cycle();
        let n = cycle.len();
        let mut at = vec![usize::MAX; graph.n_vertices()];
        for (k, &v) in cycle.iter().enumerate() {
            at[v] = k;
        }
        let (ca, cb) = (graph.corner(a), graph.corner(b));
        if (at[ca.primal] + 1) % n != at[ca.dual] {
            return Err(DobrushinError::Orientation(a));
        }
        if (at[cb.dual] + 1) % n != at[cb.primal] {
            return Err(DobrushinError::Orientation(b));
        }
        let collect = |from: usize, to: usize, primal: bool| {
            let mut out = Vec::new();
            let mut k = from;
            loop {
                let v = cycle[k];
                if graph.is_primal(v) == primal {
                    out.push(v);
                }
                if k == to {
                    break;
                }
                k = (k + 1) % n;
            }
            out
        };
        let primal_arc = collect(at[cb.primal], at[ca.primal], true);
        let dual_arc = collect(at[ca.dual], at[cb.dual], false);
        Ok(Self { primal_arc, dual_arc, a, b })
    }

    /// Same as [`DobrushinBoundary::new`] with the corners given by their endpoints.
    pub fn from_pairs(graph: &QuadGraph, a: (usize, usize), b: (usize, usize)) -> Result<Self, DobrushinError> {
        let ca = graph.corner_between(a.0, a.1).ok_or(DobrushinError::NoCorner(a.0, a.1))?;
        let cb = graph.corner_between(b.0, b.1).ok_or(DobrushinError::NoCorner(b.0, b.1))?;
        Self::new(graph, ca, cb)
    }

    /// Splits the boundary roughly in half: `a` is the first primal-to-dual
    /// step of the boundary cycle and `b` the dual-to-primal step closest to
    /// the opposite side.
    pub fn balanced(graph: &QuadGraph) -> Result<Self, DobrushinError> {
        let cycle = graph.boundary_cycle();
        let n = cycle.len();
        let step = |k: usize| (cycle[k], cycle[(k + 1) % n]);
        let ka = (0..n)
            .find(|&k| graph.is_primal(step(k).0) && !graph.is_primal(step(k).1))
            .ok_or(DobrushinError::Coincident)?;
        let kb = (1..n)
            .map(|s| (ka + s) % n)
            .filter(|&k| !graph.is_primal(step(k).0) && graph.is_primal(step(k).1))
            .min_by_key(|&k| ((k + n - ka) % n).abs_diff(n / 2))
            .ok_or(DobrushinError::Coincident)?;
        let (pa, da) = step(ka);
        let (db, pb) = step(kb);
        Self::from_pairs(graph, (pa, da), (pb, db))
    }

    /// Per-vertex membership flags `(on primal arc, on dual arc)`.
    pub fn arc_masks(&self, n_vertices: usize) -> (Vec<bool>, Vec<bool>) {
        let mut p = vec![false; n_vertices];
        let mut d = vec![false; n_vertices];
        for &v in &self.primal_arc {
            p[v] = true;
        }
        for &v in &self.dual_arc {
            d[v] = true;
        }
        (p, d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadgraph::{build_rect_lattice, RectLayout};

    #[test]
    fn arcs_on_a_square() {
        let (w, h) = (2, 2);
        let g = build_rect_lattice(w, h);
        let lay = RectLayout::new(w, h);
        // a on the bottom side, b on the top side
        let a = (lay.id(0, 0), lay.id(1, 0));
        let b = (lay.id(0, 2), lay.id(1, 2));
        let d = DobrushinBoundary::from_pairs(&g, a, b).unwrap();
        let coords = lay.coords();
        let p: Vec<_> = d.primal_arc.iter().map(|&v| coords[v]).collect();
        let q: Vec<_> = d.dual_arc.iter().map(|&v| coords[v]).collect();
        assert_eq!(p, vec![(0, 2), (0, 0)]);
        assert_eq!(q, vec![(1, 0), (2, 1), (1, 2)]);
    }

    #[test]
    fn misoriented_corner_is_rejected() {
        let g = build_rect_lattice(2, 2);
        let lay = RectLayout::new(2, 2);
        let err = DobrushinBoundary::from_pairs(&g, (lay.id(2, 0), lay.id(1, 0)), (lay.id(2, 2), lay.id(1, 2)));
        assert!(matches!(err, Err(DobrushinError::Orientation(_))));
    }

    #[test]
    fn balanced_split_has_both_arcs() {
        for (w, h) in [(1, 1), (2, 1), (3, 3), (4, 2)] {
            let g = build_rect_lattice(w, h);
            let d = DobrushinBoundary::balanced(&g).unwrap();
            assert!(!d.primal_arc.is_empty() && !d.dual_arc.is_empty());
            let n = g.boundary_cycle().len();
            // arcs are half of each type of boundary vertex, up to one
            assert!((d.primal_arc.len() + d.dual_arc.len()).abs_diff(n / 2) <= 2, "{w}x{h}");
        }
    }
}

//! Planar quad-graphs: primal and dual vertices, quads, corners (medial
//! edges), counterclockwise rotation systems and Dobrushin boundary arcs.
//!
//! Vertex ids are dense and primal-first: `0..n_primal` are primal,
//! `n_primal..n_primal + n_dual` are dual. Every quad is stored as the
//! counterclockwise 4-cycle `(v0•, v0°, v1•, v1°)`.

mod builders;
mod dobrushin;
mod io;

use std::collections::HashMap;
use std::fmt;

pub use builders::{build_from_triangulation, build_rect_lattice, RectLayout, TriangulatedGraph, TriangulationError};
pub use dobrushin::{DobrushinBoundary, DobrushinError};
pub use io::{read_graph, write_graph, GraphParseError};

/// A medial edge: an incident (primal, dual) vertex pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Corner {
    pub primal: usize,
    pub dual: usize,
}

/// Counterclockwise fan around a vertex.
///
/// `quads[k]` lies between `corners[k]` and `corners[k + 1]` (indices taken
/// modulo the length when the fan is complete).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Fan {
    pub corners: Vec<usize>,
    pub quads: Vec<usize>,
    pub complete: bool,
}

/// An invariant violated by a quad list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    VertexOutOfRange { quad: usize, vertex: usize },
    Bipartite { quad: usize },
    Loop { quad: usize },
    CornerMultiplicity { corner: Corner, count: usize },
    Orientation { corner: Corner },
    MultipleEdge { quads: (usize, usize) },
    Degree { vertex: usize, corners: usize },
    Rotation { vertex: usize },
    Boundary,
    Euler { characteristic: i64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::VertexOutOfRange { quad, vertex } => {
                write!(f, "vertex range violation: quad {quad} references vertex {vertex}")
            }
            Violation::Bipartite { quad } => write!(f, "bipartite quad violation: quad {quad}"),
            Violation::Loop { quad } => write!(f, "loop violation: quad {quad} repeats a vertex"),
            Violation::CornerMultiplicity { corner, count } => write!(
                f,
                "corner multiplicity violation: corner ({}, {}) lies on {count} quads",
                corner.primal, corner.dual
            ),
            Violation::Orientation { corner } => write!(
                f,
                "orientation violation: corner ({}, {}) traversed twice in the same direction",
                corner.primal, corner.dual
            ),
            Violation::MultipleEdge { quads } => {
                write!(f, "multiple edge violation: quads {} and {} share a diagonal", quads.0, quads.1)
            }
            Violation::Degree { vertex, corners } => {
                write!(f, "degree violation: vertex {vertex} has {corners} corners")
            }
            Violation::Rotation { vertex } => {
                write!(f, "rotation violation: quads around vertex {vertex} do not form one fan")
            }
            Violation::Boundary => write!(f, "boundary violation: boundary corners do not form a single cycle"),
            Violation::Euler { characteristic } => {
                write!(f, "euler violation: V - E + F = {characteristic}, expected 2")
            }
        }
    }
}

/// Checks a raw quad list against the quad-graph invariants.
///
/// An empty result means the list describes a valid simply connected
/// planar quad-graph.
pub fn validate(n_primal: usize, n_dual: usize, quads: &[[usize; 4]]) -> Vec<Violation> {
    let n = n_primal + n_dual;
    let mut out = Vec::new();
    if n == 0 && quads.is_empty() {
        return out;
    }
    let mut usable = vec![true; quads.len()];
    for (qi, q) in quads.iter().enumerate() {
        if let Some(&v) = q.iter().find(|&&v| v >= n) {
            out.push(Violation::VertexOutOfRange { quad: qi, vertex: v });
            usable[qi] = false;
            continue;
        }
        let primal_ok = q[0] < n_primal && q[2] < n_primal;
        let dual_ok = q[1] >= n_primal && q[3] >= n_primal;
        if !(primal_ok && dual_ok) {
            out.push(Violation::Bipartite { quad: qi });
            usable[qi] = false;
        } else if q[0] == q[2] || q[1] == q[3] {
            out.push(Violation::Loop { quad: qi });
            usable[qi] = false;
        }
    }
    if out.iter().any(|v| matches!(v, Violation::VertexOutOfRange { .. })) {
        return out;
    }

    let mut sides: HashMap<Corner, (usize, usize)> = HashMap::new();
    let mut diagonals: HashMap<(usize, usize), usize> = HashMap::new();
    for (qi, q) in quads.iter().enumerate() {
        if !usable[qi] {
            continue;
        }
        for k in 0..4 {
            let (u, w) = (q[k], q[(k + 1) % 4]);
            let (c, forward) =
                if k % 2 == 0 { (Corner { primal: u, dual: w }, true) } else { (Corner { primal: w, dual: u }, false) };
            let e = sides.entry(c).or_insert((0, 0));
            if forward {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        }
        for diag in [(q[0].min(q[2]), q[0].max(q[2])), (q[1].min(q[3]), q[1].max(q[3]))] {
            if let Some(&other) = diagonals.get(&diag) {
                out.push(Violation::MultipleEdge { quads: (other, qi) });
            } else {
                diagonals.insert(diag, qi);
            }
        }
    }
    let mut corner_list: Vec<_> = sides.iter().collect();
    corner_list.sort();
    for (c, &(fw, bw)) in &corner_list {
        if fw + bw > 2 {
            out.push(Violation::CornerMultiplicity { corner: **c, count: fw + bw });
        } else if fw > 1 || bw > 1 {
            out.push(Violation::Orientation { corner: **c });
        }
    }

    let mut degree = vec![0usize; n];
    for c in sides.keys() {
        degree[c.primal] += 1;
        degree[c.dual] += 1;
    }
    for (v, &d) in degree.iter().enumerate() {
        if d < 2 {
            out.push(Violation::Degree { vertex: v, corners: d });
        }
    }
    if !out.is_empty() {
        return out;
    }

    let g = QuadGraph::assemble(n_primal, n_dual, quads.to_vec());
    for v in 0..n {
        if g.fans[v].quads.len() != g.vertex_quad_count[v] {
            out.push(Violation::Rotation { vertex: v });
        }
    }
    if g.boundary_cycle_checked().is_none() {
        out.push(Violation::Boundary);
    }
    let chi = n as i64 - g.corners.len() as i64 + g.quads.len() as i64 + 1;
    if chi != 2 {
        out.push(Violation::Euler { characteristic: chi });
    }
    out
}

/// Error returned when a quad list fails validation.
#[derive(Debug, Clone, thiserror::Error)]
#[error("invalid quad-graph: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct InvalidGraph(pub Vec<Violation>);

/// A validated planar quad-graph. Immutable after construction.
#[derive(Clone, Debug)]
pub struct QuadGraph {
    n_primal: usize,
    n_dual: usize,
    quads: Vec<[usize; 4]>,
    corners: Vec<Corner>,
    corner_index: HashMap<Corner, usize>,
    quad_corners: Vec<[usize; 4]>,
    corner_quads: Vec<Vec<usize>>,
    fans: Vec<Fan>,
    vertex_quad_count: Vec<usize>,
}

impl QuadGraph {
    /// Builds a graph from a counterclockwise quad list, rejecting invalid input.
    pub fn new(n_primal: usize, n_dual: usize, quads: Vec<[usize; 4]>) -> Result<Self, InvalidGraph> {
        let report = validate(n_primal, n_dual, &quads);
        if !report.is_empty() {
            return Err(InvalidGraph(report));
        }
        Ok(Self::assemble(n_primal, n_dual, quads))
    }

    fn assemble(n_primal: usize, n_dual: usize, quads: Vec<[usize; 4]>) -> Self {
        let n = n_primal + n_dual;
        let mut corners = Vec::new();
        let mut corner_index = HashMap::new();
        let mut quad_corners = Vec::with_capacity(quads.len());
        let mut corner_quads: Vec<Vec<usize>> = Vec::new();
        for (qi, q) in quads.iter().enumerate() {
            let cs = [(q[0], q[1]), (q[2], q[1]), (q[2], q[3]), (q[0], q[3])];
            let mut ids = [0; 4];
            for (k, &(p, d)) in cs.iter().enumerate() {
                let c = Corner { primal: p, dual: d };
                let id = *corner_index.entry(c).or_insert_with(|| {
                    corners.push(c);
                    corner_quads.push(Vec::new());
                    corners.len() - 1
                });
                corner_quads[id].push(qi);
                ids[k] = id;
            }
            quad_corners.push(ids);
        }

        // Around v inside quad q the fan runs counterclockwise from the corner
        // towards the next cycle vertex to the corner towards the previous one.
        let mut step: Vec<HashMap<usize, (usize, usize)>> = vec![HashMap::new(); n];
        let mut is_second: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut vertex_quad_count = vec![0; n];
        for (qi, q) in quads.iter().enumerate() {
            for k in 0..4 {
                let v = q[k];
                let first = quad_corners[qi][k];
                let second = quad_corners[qi][(k + 3) % 4];
                step[v].insert(first, (qi, second));
                is_second[v].push(second);
                vertex_quad_count[v] += 1;
            }
        }
        let mut fans = vec![Fan::default(); n];
        for v in 0..n {
            if step[v].is_empty() {
                continue;
            }
            let mut starts: Vec<usize> = step[v].keys().copied().filter(|c| !is_second[v].contains(c)).collect();
            starts.sort();
            let complete = starts.is_empty();
            let start = if complete { *step[v].keys().min().unwrap() } else { starts[0] };
            let mut fan = Fan { corners: vec![start], quads: Vec::new(), complete };
            let mut cur = start;
            while let Some(&(q, next)) = step[v].get(&cur) {
                fan.quads.push(q);
                if next == start || fan.quads.len() > vertex_quad_count[v] {
                    break;
                }
                fan.corners.push(next);
                cur = next;
            }
            fans[v] = fan;
        }
        QuadGraph {
            n_primal,
            n_dual,
            quads,
            corners,
            corner_index,
            quad_corners,
            corner_quads,
            fans,
            vertex_quad_count,
        }
    }

    pub fn n_primal(&self) -> usize {
        self.n_primal
    }

    pub fn n_dual(&self) -> usize {
        self.n_dual
    }

    pub fn n_vertices(&self) -> usize {
        self.n_primal + self.n_dual
    }

    pub fn is_primal(&self, v: usize) -> bool {
        v < self.n_primal
    }

    pub fn quads(&self) -> &[[usize; 4]] {
        &self.quads
    }

    pub fn quad(&self, q: usize) -> [usize; 4] {
        self.quads[q]
    }

    pub fn corners(&self) -> &[Corner] {
        &self.corners
    }

    pub fn corner(&self, c: usize) -> Corner {
        self.corners[c]
    }

    /// Corners of a quad, in the order of its sides `v0•v0°, v0°v1•, v1•v1°, v1°v0•`.
    pub fn quad_corners(&self, q: usize) -> [usize; 4] {
        self.quad_corners[q]
    }

    /// Quads containing a corner (one for boundary corners, two otherwise).
    pub fn corner_quads(&self, c: usize) -> &[usize] {
        &self.corner_quads[c]
    }

    pub fn is_boundary_corner(&self, c: usize) -> bool {
        self.corner_quads[c].len() == 1
    }

    /// Corner id of the incident pair `{u, w}`, in either order.
    pub fn corner_between(&self, u: usize, w: usize) -> Option<usize> {
        let c = if self.is_primal(u) { Corner { primal: u, dual: w } } else { Corner { primal: w, dual: u } };
        self.corner_index.get(&c).copied()
    }

    pub fn fan(&self, v: usize) -> &Fan {
        &self.fans[v]
    }

    /// Whether the quad fan around `v` closes up.
    pub fn is_interior(&self, v: usize) -> bool {
        self.fans[v].complete
    }

    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.n_vertices()).filter(|&v| self.is_interior(v)).collect()
    }

    /// The endpoint of corner `c` other than `v`.
    pub fn corner_other(&self, c: usize, v: usize) -> usize {
        let k = self.corners[c];
        if k.primal == v {
            k.dual
        } else {
            k.primal
        }
    }

    /// Boundary vertices of the quad-graph in counterclockwise order,
    /// starting from the smallest id.
    pub fn boundary_cycle(&self) -> Vec<usize> {
        self.boundary_cycle_checked().expect("validated graph has a single boundary cycle")
    }

    fn boundary_cycle_checked(&self) -> Option<Vec<usize>> {
        let mut next: HashMap<usize, usize> = HashMap::new();
        for (qi, q) in self.quads.iter().enumerate() {
            for k in 0..4 {
                if self.corner_quads[self.quad_corners[qi][k]].len() == 1 {
                    let (u, w) = (q[k], q[(k + 1) % 4]);
                    if next.insert(u, w).is_some() {
                        return None;
                    }
                }
            }
        }
        if self.quads.is_empty() {
            return Some(Vec::new());
        }
        let start = *next.keys().min()?;
        let mut cycle = vec![start];
        let mut cur = next[&start];
        while cur != start {
            if cycle.len() > next.len() {
                return None;
            }
            cycle.push(cur);
            cur = *next.get(&cur)?;
        }
        (cycle.len() == next.len()).then_some(cycle)
    }

    /// Re-runs the invariant checks on this graph.
    pub fn validate(&self) -> Vec<Violation> {
        validate(self.n_primal, self.n_dual, &self.quads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consecutive_primal_vertices_are_reported() {
        let r = validate(2, 2, &[[0, 1, 1, 3]]);
        assert!(r.iter().any(|v| matches!(v, Violation::Bipartite { quad: 0 })));
        assert!(r[0].to_string().starts_with("bipartite quad violation"));
    }

    #[test]
    fn corner_in_three_quads_is_reported() {
        // three quads hinged on the side (0, 3)
        let quads = [[0, 3, 1, 4], [1, 5, 0, 3], [0, 3, 2, 6]];
        let r = validate(3, 4, &quads);
        let hit = r.iter().find(|v| matches!(v, Violation::CornerMultiplicity { .. })).unwrap();
        assert!(hit.to_string().starts_with("corner multiplicity violation"));
    }

    #[test]
    fn degree_one_vertex_is_rejected() {
        let r = validate(2, 3, &[[0, 2, 1, 3]]);
        assert!(r.iter().any(|v| matches!(v, Violation::Degree { vertex: 4, corners: 0 })));
    }

    #[test]
    fn fans_alternate_corners_and_quads() {
        let g = build_rect_lattice(2, 2);
        for v in 0..g.n_vertices() {
            let fan = g.fan(v);
            let m = fan.corners.len();
            for (k, &q) in fan.quads.iter().enumerate() {
                let qc = g.quad_corners(q);
                assert!(qc.contains(&fan.corners[k]));
                assert!(qc.contains(&fan.corners[(k + 1) % m]));
            }
        }
    }
}

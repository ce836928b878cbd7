use std::collections::HashMap;

use super::{InvalidGraph, QuadGraph};

/// Vertex numbering of the rectangular lattice built by [`build_rect_lattice`].
///
/// Grid points `(i, j)` with `0 ≤ i ≤ width`, `0 ≤ j ≤ height`; a point is
/// primal iff `i + j` is even.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RectLayout {
    pub width: usize,
    pub height: usize,
}

impl RectLayout {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height }
    }

    fn n_points(&self) -> usize {
        (self.width + 1) * (self.height + 1)
    }

    pub fn n_primal(&self) -> usize {
        self.n_points().div_ceil(2)
    }

    pub fn n_dual(&self) -> usize {
        self.n_points() / 2
    }

    /// Vertex id of grid point `(i, j)`.
    pub fn id(&self, i: usize, j: usize) -> usize {
        if (i + j).is_multiple_of(2) {
            self.primal_rank(i, j)
        } else {
            self.n_primal() + self.dual_rank(i, j)
        }
    }

    fn primal_rank(&self, i: usize, j: usize) -> usize {
        let before: usize = (0..j).map(|r| self.row_count(r, true)).sum();
        before + i / 2
    }

    fn dual_rank(&self, i: usize, j: usize) -> usize {
        let before: usize = (0..j).map(|r| self.row_count(r, false)).sum();
        before + i / 2
    }

    fn row_count(&self, j: usize, primal: bool) -> usize {
        let n = self.width + 1;
        let even_cols = n.div_ceil(2);
        // columns i with i + j even
        let evens = if j.is_multiple_of(2) { even_cols } else { n - even_cols };
        if primal {
            evens
        } else {
            n - evens
        }
    }

    /// Grid coordinates of every vertex, indexed by vertex id.
    pub fn coords(&self) -> Vec<(usize, usize)> {
        let mut out = vec![(0, 0); self.n_points()];
        for j in 0..=self.height {
            for i in 0..=self.width {
                out[self.id(i, j)] = (i, j);
            }
        }
        out
    }
}

/// Quad-graph of a `width × height` block of unit cells. Each cell is one quad
/// whose primal diagonal joins its two primal corners.
pub fn build_rect_lattice(width: usize, height: usize) -> QuadGraph {
    assert!(width >= 1 && height >= 1, "lattice dimensions must be positive");
    let lay = RectLayout::new(width, height);
    let mut quads = Vec::with_capacity(width * height);
    for j in 0..height {
        for i in 0..width {
            let mut cyc = [lay.id(i, j), lay.id(i + 1, j), lay.id(i + 1, j + 1), lay.id(i, j + 1)];
            if (i + j) % 2 == 1 {
                cyc.rotate_left(1);
            }
            quads.push(cyc);
        }
    }
    QuadGraph::new(lay.n_primal(), lay.n_dual(), quads).expect("rectangular lattice is a valid quad-graph")
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum TriangulationError {
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    NonManifoldEdge(usize, usize),
    #[error("triangle {0} is not counterclockwise or is inconsistently oriented with a neighbour")]
    Orientation(usize),
    #[error("triangle {0} references a vertex without a position")]
    MissingVertex(usize),
    #[error(transparent)]
    Invalid(#[from] InvalidGraph),
}

/// Quad-graph of a triangulation together with the id maps back to it.
#[derive(Clone, Debug)]
pub struct TriangulatedGraph {
    pub graph: QuadGraph,
    /// Primal vertex id of each triangulation vertex (None if it lies on no interior edge).
    pub primal_of_vertex: Vec<Option<usize>>,
    /// Dual vertex id of each triangle (None if it has no interior edge).
    pub dual_of_triangle: Vec<Option<usize>>,
    /// Triangulation vertex behind each primal vertex.
    pub vertex_of_primal: Vec<usize>,
    /// Triangle behind each dual vertex (indexed by `dual id - n_primal`).
    pub triangle_of_dual: Vec<usize>,
}

/// Quad-graph whose primal vertices are the triangulation vertices, whose dual
/// vertices are the triangles, and which has one quad per interior edge.
pub fn build_from_triangulation(
    triangles: &[[usize; 3]],
    positions: &[[f64; 2]],
) -> Result<TriangulatedGraph, TriangulationError> {
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    let mut undirected: HashMap<(usize, usize), usize> = HashMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        if tri.iter().any(|&v| v >= positions.len()) {
            return Err(TriangulationError::MissingVertex(t));
        }
        let [a, b, c] = tri.map(|v| positions[v]);
        let area = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        if area <= 0.0 {
            return Err(TriangulationError::Orientation(t));
        }
        for k in 0..3 {
            let (u, w) = (tri[k], tri[(k + 1) % 3]);
            let count = undirected.entry((u.min(w), u.max(w))).or_insert(0);
            *count += 1;
            if *count > 2 {
                return Err(TriangulationError::NonManifoldEdge(u.min(w), u.max(w)));
            }
            if directed.insert((u, w), t).is_some() {
                return Err(TriangulationError::Orientation(t));
            }
        }
    }

    // interior edges in a deterministic order
    let mut interior: Vec<(usize, usize, usize, usize)> = Vec::new();
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let (u, w) = (tri[k], tri[(k + 1) % 3]);
            if u < w {
                if let Some(&t2) = directed.get(&(w, u)) {
                    interior.push((u, w, t, t2));
                }
            }
        }
    }

    let mut primal_of_vertex = vec![None; positions.len()];
    let mut dual_of_triangle = vec![None; triangles.len()];
    let mut vertex_of_primal = Vec::new();
    let mut triangle_of_dual = Vec::new();
    for &(u, w, t1, t2) in &interior {
        for v in [u, w] {
            if primal_of_vertex[v].is_none() {
                primal_of_vertex[v] = Some(vertex_of_primal.len());
                vertex_of_primal.push(v);
            }
        }
        for t in [t1, t2] {
            if dual_of_triangle[t].is_none() {
                dual_of_triangle[t] = Some(triangle_of_dual.len());
                triangle_of_dual.push(t);
            }
        }
    }
    let np = vertex_of_primal.len();
    for d in dual_of_triangle.iter_mut().flatten() {
        *d += np;
    }
    // edge u→w has triangle t1 on its left and t2 on its right
    let quads = interior
        .iter()
        .map(|&(u, w, t1, t2)| {
            [
                primal_of_vertex[u].unwrap(),
                dual_of_triangle[t2].unwrap(),
                primal_of_vertex[w].unwrap(),
                dual_of_triangle[t1].unwrap(),
            ]
        })
        .collect();
    let graph = QuadGraph::new(np, triangle_of_dual.len(), quads)?;
    Ok(TriangulatedGraph { graph, primal_of_vertex, dual_of_triangle, vertex_of_primal, triangle_of_dual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell() {
        let g = build_rect_lattice(1, 1);
        assert_eq!((g.n_primal(), g.n_dual(), g.quads().len(), g.corners().len()), (2, 2, 1, 4));
    }

    #[test]
    fn two_by_two_has_twelve_corners() {
        let g = build_rect_lattice(2, 2);
        assert_eq!(g.quads().len(), 4);
        assert_eq!(g.corners().len(), 12);
        assert!(g.validate().is_empty());
        let centre = RectLayout::new(2, 2).id(1, 1);
        assert!(g.is_interior(centre));
        assert_eq!(g.fan(centre).quads.len(), 4);
    }

    #[test]
    fn strip_passes_euler() {
        let g = build_rect_lattice(3, 1);
        let chi = g.n_vertices() as i64 - g.corners().len() as i64 + g.quads().len() as i64 + 1;
        assert_eq!(chi, 2);
        assert!(g.validate().is_empty());
    }

    #[test]
    fn layout_ids_are_dense_and_primal_first() {
        for (w, h) in [(1, 1), (2, 3), (4, 4), (5, 2)] {
            let lay = RectLayout::new(w, h);
            let coords = lay.coords();
            let mut seen = vec![false; coords.len()];
            for j in 0..=h {
                for i in 0..=w {
                    let v = lay.id(i, j);
                    assert!(!seen[v]);
                    seen[v] = true;
                    assert_eq!((i + j) % 2 == 0, v < lay.n_primal());
                    assert_eq!(coords[v], (i, j));
                }
            }
        }
    }

    #[test]
    fn two_triangles_make_one_quad() {
        let pos = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let t = build_from_triangulation(&[[0, 1, 2], [0, 2, 3]], &pos).unwrap();
        assert_eq!(t.graph.quads().len(), 1);
        let boundary = (0..t.graph.corners().len()).filter(|&c| t.graph.is_boundary_corner(c)).count();
        assert_eq!(boundary, 4);
        assert_eq!(t.primal_of_vertex[1], None);
    }

    #[test]
    fn hexagonal_fan_closes_around_centre() {
        let mut pos = vec![[0.0, 0.0]];
        for k in 0..6 {
            let a = k as f64 * std::f64::consts::PI / 3.0;
            pos.push([a.cos(), a.sin()]);
        }
        let tris: Vec<[usize; 3]> = (0..6).map(|k| [0, 1 + k, 1 + (k + 1) % 6]).collect();
        let t = build_from_triangulation(&tris, &pos).unwrap();
        let c = t.primal_of_vertex[0].unwrap();
        assert!(t.graph.is_interior(c));
        assert_eq!(t.graph.fan(c).quads.len(), 6);
        assert!(t.graph.validate().is_empty());
    }

    #[test]
    fn non_manifold_and_flipped_inputs_are_rejected() {
        let pos = [[0.0, 0.0], [1.0, 0.0], [0.5, 1.0], [0.5, -1.0], [0.5, 2.0]];
        let err = build_from_triangulation(&[[0, 1, 2], [1, 0, 3], [0, 1, 4]], &pos).unwrap_err();
        assert!(matches!(err, TriangulationError::NonManifoldEdge(0, 1) | TriangulationError::Orientation(_)));
        let err = build_from_triangulation(&[[0, 2, 1]], &pos).unwrap_err();
        assert!(matches!(err, TriangulationError::Orientation(0)));
    }
}

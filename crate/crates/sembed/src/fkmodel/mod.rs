//! FK-Ising measure on an s-embedding with Dobrushin boundary conditions:
//! exact enumeration, Markov chain samplers, the exploration interface, the
//! fermionic observable F and its square integral H.
//!
//! Every quad is a free edge. The wired primal arc is represented by a ghost
//! vertex joining all of its vertices, and the dual arc by a ghost joining
//! all dual arc vertices; the exploration turns around the collar of boundary
//! edges implied by these ghosts.

mod enumerate;
mod interface;
mod observable;
mod sampler;

use std::fmt;
use std::str::FromStr;

use crate::discrete_ops::tau;
use crate::quadgraph::DobrushinBoundary;
use crate::sembedding::SEmbedding;
pub use crate::sembedding::WeightFormula;
use crate::C64;

pub use enumerate::{enumerate_exact, ExactDistribution, DEFAULT_ENUMERATION_CAP};
pub use interface::{trace_interface, winding, InterfaceCurve};
pub use observable::{
    build_h, build_h_from_estimate, estimate_f, exact_f, observable_squares, HEstimate, McOptions, ObservableEstimate,
};
pub use sampler::{mcmc_sample, Sampler, SamplerKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FkError {
    #[error("{free} free edges exceed the enumeration cap {cap}")]
    CapExceeded { free: usize, cap: usize },
    #[error("exploration left the domain at corner {0}")]
    LeftDomain(usize),
    #[error("corner {0} is not on the curve")]
    NotOnCurve(usize),
    #[error("corners {0} and {1} are not adjacent")]
    NotAdjacent(usize, usize),
    #[error("monodromy defect {defect:e} at {location}")]
    Monodromy { location: String, defect: f64 },
    #[error("H = {value} at arc vertex {vertex}, expected {expected}")]
    BoundaryValue { vertex: usize, value: f64, expected: f64 },
    #[error("|H| = {value} at vertex {vertex} exceeds 1")]
    Bound { vertex: usize, value: f64 },
    #[error("value at corner {corner} is off its line by {residual:e}")]
    OffLine { corner: usize, residual: f64 },
    #[error("field has {got} values, expected {expected}")]
    Size { expected: usize, got: usize },
    #[error("linear solve failed: {0}")]
    Solve(String),
}

/// Per-edge odds convention of the FK weight.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EdgeRatio {
    /// (1 − x)/x
    #[default]
    AsPrinted,
    /// x/(1 − x)
    Standard,
}

impl EdgeRatio {
    pub fn ratio(self, x: f64) -> f64 {
        match self {
            Self::AsPrinted => (1.0 - x) / x,
            Self::Standard => x / (1.0 - x),
        }
    }
}

impl fmt::Display for EdgeRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::AsPrinted => "as_printed",
            Self::Standard => "standard",
        })
    }
}

impl FromStr for EdgeRatio {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "as_printed" => Ok(Self::AsPrinted),
            "standard" => Ok(Self::Standard),
            _ => Err(format!("unknown edge_ratio {s:?} (expected as_printed or standard)")),
        }
    }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut u: usize) -> usize {
        while self.parent[u] != u {
            self.parent[u] = self.parent[self.parent[u]];
            u = self.parent[u];
        }
        u
    }

    /// Returns false when `u` and `w` were already joined.
    pub fn union(&mut self, u: usize, w: usize) -> bool {
        let (mut a, mut b) = (self.find(u), self.find(w));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        true
    }

    pub fn same(&mut self, u: usize, w: usize) -> bool {
        self.find(u) == self.find(w)
    }
}

/// Everything the FK model needs from an embedded Dobrushin domain.
#[derive(Clone, Debug)]
pub struct FkDomain {
    quads: Vec<[usize; 4]>,
    quad_corners: Vec<[usize; 4]>,
    corners: Vec<(usize, usize)>,
    corner_quads: Vec<Vec<usize>>,
    n_primal: usize,
    n_vertices: usize,
    s: Vec<C64>,
    centers: Vec<C64>,
    weights: Vec<f64>,
    ratios: Vec<f64>,
    edge_ratio: EdgeRatio,
    weight_formula: WeightFormula,
    boundary: DobrushinBoundary,
    on_primal_arc: Vec<bool>,
    on_dual_arc: Vec<bool>,
    /// position on the boundary cycle
    cycle_pos: Vec<Option<usize>>,
    cycle: Vec<usize>,
    taus: Vec<C64>,
    lengths: Vec<f64>,
    /// primal neighbours through each quad: (quad, other primal endpoint)
    primal_adj: Vec<Vec<(usize, usize)>>,
}

impl FkDomain {
    pub fn new(embedding: &SEmbedding, boundary: DobrushinBoundary, edge_ratio: EdgeRatio) -> Self {
        Self::with_conventions(embedding, boundary, edge_ratio, WeightFormula::default())
    }

    pub fn with_conventions(
        embedding: &SEmbedding,
        boundary: DobrushinBoundary,
        edge_ratio: EdgeRatio,
        weight_formula: WeightFormula,
    ) -> Self {
        let g = embedding.graph();
        let nq = g.quads().len();
        let corners: Vec<(usize, usize)> = g.corners().iter().map(|c| (c.primal, c.dual)).collect();
        let (on_primal_arc, on_dual_arc) = boundary.arc_masks(g.n_vertices());
        let cycle = g.boundary_cycle();
        let mut cycle_pos = vec![None; g.n_vertices()];
        for (k, &v) in cycle.iter().enumerate() {
            cycle_pos[v] = Some(k);
        }
        let mut primal_adj = vec![Vec::new(); g.n_primal()];
        for (q, quad) in g.quads().iter().enumerate() {
            primal_adj[quad[0]].push((q, quad[2]));
            primal_adj[quad[2]].push((q, quad[0]));
        }
        let weights = embedding.weights_with(weight_formula);
        Self {
            quads: g.quads().to_vec(),
            quad_corners: (0..nq).map(|q| g.quad_corners(q)).collect(),
            corner_quads: (0..corners.len()).map(|c| g.corner_quads(c).to_vec()).collect(),
            n_primal: g.n_primal(),
            n_vertices: g.n_vertices(),
            s: embedding.positions().to_vec(),
            centers: (0..nq).map(|q| embedding.quad_center(q)).collect(),
            ratios: weights.iter().map(|&x| edge_ratio.ratio(x)).collect(),
            weights,
            edge_ratio,
            weight_formula,
            on_primal_arc,
            on_dual_arc,
            cycle_pos,
            cycle,
            taus: (0..corners.len()).map(|c| tau(embedding, c)).collect(),
            lengths: (0..corners.len()).map(|c| embedding.corner_length(c)).collect(),
            primal_adj,
            corners,
            boundary,
        }
    }

    /// Domain with the balanced Dobrushin split of the boundary.
    pub fn balanced(embedding: &SEmbedding, edge_ratio: EdgeRatio) -> Result<Self, crate::quadgraph::DobrushinError> {
        let b = DobrushinBoundary::balanced(embedding.graph())?;
        Ok(Self::new(embedding, b, edge_ratio))
    }

    pub fn n_free(&self) -> usize {
        self.quads.len()
    }

    pub fn n_primal(&self) -> usize {
        self.n_primal
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_corners(&self) -> usize {
        self.corners.len()
    }

    pub fn quads(&self) -> &[[usize; 4]] {
        &self.quads
    }

    /// `(primal, dual)` endpoints of a corner.
    pub fn corner(&self, c: usize) -> (usize, usize) {
        self.corners[c]
    }

    pub fn boundary(&self) -> &DobrushinBoundary {
        &self.boundary
    }

    pub fn edge_ratio(&self) -> EdgeRatio {
        self.edge_ratio
    }

    pub fn weight_formula(&self) -> WeightFormula {
        self.weight_formula
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    pub fn position(&self, v: usize) -> C64 {
        self.s[v]
    }

    pub fn tau(&self, c: usize) -> C64 {
        self.taus[c]
    }

    pub fn corner_length(&self, c: usize) -> f64 {
        self.lengths[c]
    }

    pub fn is_on_primal_arc(&self, v: usize) -> bool {
        self.on_primal_arc[v]
    }

    pub fn is_on_dual_arc(&self, v: usize) -> bool {
        self.on_dual_arc[v]
    }

    fn corner_id(&self, p: usize, d: usize) -> Option<usize> {
        // corners of p are reachable through the quads of p
        self.primal_adj[p].iter().flat_map(|&(q, _)| self.quad_corners[q]).find(|&c| self.corners[c] == (p, d))
    }

    /// Primal clusters with the primal arc joined through a ghost vertex
    /// (index `n_primal`).
    pub fn primal_clusters(&self, config: &FkConfig) -> UnionFind {
        let ghost = self.n_primal;
        let mut uf = UnionFind::new(self.n_primal + 1);
        for &v in &self.boundary.primal_arc {
            uf.union(v, ghost);
        }
        for (q, quad) in self.quads.iter().enumerate() {
            if config.open[q] {
                uf.union(quad[0], quad[2]);
            }
        }
        uf
    }

    /// Dual clusters (indexed by dual vertex id minus `n_primal`) with the
    /// dual arc joined through a ghost vertex at the last index.
    pub fn dual_clusters(&self, config: &FkConfig) -> UnionFind {
        let nd = self.n_vertices - self.n_primal;
        let ghost = nd;
        let mut uf = UnionFind::new(nd + 1);
        for &v in &self.boundary.dual_arc {
            uf.union(v - self.n_primal, ghost);
        }
        for (q, quad) in self.quads.iter().enumerate() {
            if !config.open[q] {
                uf.union(quad[1] - self.n_primal, quad[3] - self.n_primal);
            }
        }
        uf
    }

    /// Number of primal clusters, isolated vertices included and the wired
    /// arc counted once.
    pub fn cluster_count(&self, config: &FkConfig) -> usize {
        let mut uf = self.primal_clusters(config);
        let ghost = self.n_primal;
        let mut roots: Vec<usize> = (0..self.n_primal).map(|v| uf.find(v)).collect();
        roots.push(uf.find(ghost));
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }

    /// log of 2^{#clusters}·Π_{open} ratio(x_e).
    pub fn log_weight(&self, config: &FkConfig) -> f64 {
        let open: f64 = config.open.iter().zip(&self.ratios).filter(|(&o, _)| o).map(|(_, r)| r.ln()).sum();
        self.cluster_count(config) as f64 * std::f64::consts::LN_2 + open
    }

    /// 2^{#clusters}·Π_{open} ratio(x_e).
    pub fn weight(&self, config: &FkConfig) -> f64 {
        self.log_weight(config).exp()
    }

    /// Per-corner indicator that the primal endpoint lies in the wired
    /// cluster and the dual endpoint in the dual arc cluster.
    pub fn boundary_connection(&self, config: &FkConfig) -> Vec<bool> {
        let mut p = self.primal_clusters(config);
        let mut d = self.dual_clusters(config);
        let pg = self.n_primal;
        let dg = self.n_vertices - self.n_primal;
        self.corners.iter().map(|&(pv, dv)| p.same(pv, pg) && d.same(dv - self.n_primal, dg)).collect()
    }
}

/// Open/closed state of every quad: open means the primal diagonal is
/// present, closed means the dual diagonal is present.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FkConfig {
    pub open: Vec<bool>,
}

impl FkConfig {
    pub fn all_closed(domain: &FkDomain) -> Self {
        Self { open: vec![false; domain.n_free()] }
    }

    pub fn all_open(domain: &FkDomain) -> Self {
        Self { open: vec![true; domain.n_free()] }
    }

    /// Configuration whose bit k is the state of quad k.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        Self { open: (0..n).map(|k| mask >> k & 1 == 1).collect() }
    }

    pub fn mask(&self) -> u64 {
        self.open.iter().enumerate().fold(0, |m, (k, &o)| m | (u64::from(o) << k))
    }
}

#[cfg(test)]
mod tests;

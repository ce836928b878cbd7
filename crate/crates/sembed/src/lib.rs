//! s-embeddings of planar quad-graphs lifted into Minkowski space ℝ^{2,1},
//! the critical FK-Ising model with Dobrushin boundary conditions on them,
//! and the continuum Laplace-Beltrami oracle on maximal surfaces.

pub mod continuum;
pub mod discrete_ops;
pub mod fkmodel;
mod ordering;
pub mod quadgraph;
pub mod sembedding;

pub use num_complex::Complex64 as C64;

use std::collections::VecDeque;

use nalgebra::DMatrix;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};

use crate::ordering::reverse_cuthill_mckee;

use super::{enumerate_exact, trace_interface, FkDomain, FkError, InterfaceCurve, Sampler, SamplerKind};
use crate::discrete_ops::{CornerField, VertexField};
use crate::C64;

/// Adds the contribution of one interface to `acc`: at every visited corner c,
/// weight·exp(sign·(i/2)·W(c→b)) / (√τ(b)·√|S(c•) − S(c°)|).
fn accumulate(domain: &FkDomain, curve: &InterfaceCurve, weight: f64, sign: f64, acc: &mut [C64]) {
    let norm_b = domain.tau(domain.boundary.b).sqrt();
    let mut w = 0.0;
    for k in (0..curve.corners.len()).rev() {
        if k < curve.turns.len() {
            w += curve.turns[k];
        }
        let c = curve.corners[k];
        let phase = C64::from_polar(1.0, sign * w / 2.0);
        acc[c] += weight * phase / (norm_b * domain.corner_length(c).sqrt());
    }
}

pub(crate) fn exact_f_with_phase(domain: &FkDomain, cap: usize, sign: f64) -> Result<CornerField, FkError> {
    let dist = enumerate_exact(domain, cap)?;
    let mut acc = vec![C64::new(0.0, 0.0); domain.n_corners()];
    for (config, p) in dist.iter() {
        if p == 0.0 {
            continue;
        }
        let curve = trace_interface(&config, domain)?;
        accumulate(domain, &curve, p, sign, &mut acc);
    }
    Ok(CornerField { values: acc, lines: domain.taus.clone() })
}

/// Exact observable F(c) = E[𝟙_{c∈γ}·exp((i/2)·W(γ, c, b))] / (√τ(b)·√|S(c•) − S(c°)|)
/// by full enumeration.
pub fn exact_f(domain: &FkDomain, cap: usize) -> Result<CornerField, FkError> {
    exact_f_with_phase(domain, cap, 1.0)
}

/// X_c² = F(c)²·τ(c)·|S(c•) − S(c°)| per corner; real for values on their lines.
pub fn observable_squares(domain: &FkDomain, f: &CornerField) -> Vec<C64> {
    f.values.iter().enumerate().map(|(c, &v)| v * v * domain.tau(c) * domain.corner_length(c)).collect()
}

/// H from H(v•) − H(v°) = X_c², propagated from H = 0 on the dual arc.
///
/// Fails when some X_c² is not real, when a corner closes a cycle with
/// defect above `tol`, when H ≠ 1 on the primal arc or when |H| > 1 + tol.
pub fn build_h(domain: &FkDomain, f: &CornerField, tol: f64) -> Result<VertexField, FkError> {
    if f.values.len() != domain.n_corners() {
        return Err(FkError::Size { expected: domain.n_corners(), got: f.values.len() });
    }
    let x2 = observable_squares(domain, f);
    for (c, z) in x2.iter().enumerate() {
        if z.im.abs() > tol {
            return Err(FkError::OffLine { corner: c, residual: z.im.abs() });
        }
    }
    let n = domain.n_vertices();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (c, &(p, d)) in domain.corners.iter().enumerate() {
        adj[p].push(c);
        adj[d].push(c);
    }
    let mut h: Vec<Option<f64>> = vec![None; n];
    let mut queue = VecDeque::new();
    for &d in &domain.boundary.dual_arc {
        h[d] = Some(0.0);
        queue.push_back(d);
    }
    while let Some(v) = queue.pop_front() {
        let hv = h[v].unwrap();
        for &c in &adj[v] {
            let (p, d) = domain.corners[c];
            let (w, hw) = if v == p { (d, hv - x2[c].re) } else { (p, hv + x2[c].re) };
            if h[w].is_none() {
                h[w] = Some(hw);
                queue.push_back(w);
            }
        }
    }
    let h: Vec<f64> = h.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect();
    for (c, &(p, d)) in domain.corners.iter().enumerate() {
        let defect = (h[p] - h[d] - x2[c].re).abs();
        if defect.is_nan() || defect > tol {
            return Err(FkError::Monodromy { location: format!("corner {c}"), defect });
        }
    }
    for &v in &domain.boundary.primal_arc {
        if (h[v] - 1.0).abs() > tol {
            return Err(FkError::BoundaryValue { vertex: v, value: h[v], expected: 1.0 });
        }
    }
    for (v, &x) in h.iter().enumerate() {
        if x.abs() > 1.0 + tol {
            return Err(FkError::Bound { vertex: v, value: x });
        }
    }
    Ok(VertexField::real(&h))
}

/// Monte-Carlo run parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct McOptions {
    pub n_samples: usize,
    /// sweeps discarded at the start of each chain
    pub burn_in: usize,
    /// sweeps between consecutive samples
    pub thin: usize,
    pub chains: usize,
    /// batches per chain for the batch-means standard error
    pub batches: usize,
    pub sampler: SamplerKind,
    /// worker threads
    pub jobs: usize,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            n_samples: 10_000,
            burn_in: 100,
            thin: 1,
            chains: 4,
            batches: 8,
            sampler: SamplerKind::HeatBath,
            jobs: 1,
        }
    }
}

/// Monte-Carlo estimate of F per corner.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObservableEstimate {
    pub mean: Vec<C64>,
    /// batch-means standard error of the complex mean
    pub stderr: Vec<f64>,
    pub samples: usize,
    /// per-batch means, used to propagate errors to H
    pub batch_means: Vec<Vec<C64>>,
}

impl ObservableEstimate {
    pub fn as_corner_field(&self, domain: &FkDomain) -> CornerField {
        CornerField { values: self.mean.clone(), lines: domain.taus.clone() }
    }
}

fn run_chain(domain: &FkDomain, opts: &McOptions, seed: u64, chain: usize, n: usize) -> Result<Vec<Vec<C64>>, FkError> {
    let mut s = Sampler::new(domain, opts.sampler, seed, chain as u64);
    for _ in 0..opts.burn_in {
        s.sweep();
    }
    let nb = opts.batches.max(1).min(n.max(1));
    let mut batches = vec![vec![C64::new(0.0, 0.0); domain.n_corners()]; nb];
    for k in 0..n {
        for _ in 0..opts.thin.max(1) {
            s.sweep();
        }
        let curve = trace_interface(s.config(), domain)?;
        accumulate(domain, &curve, 1.0, 1.0, &mut batches[k * nb / n]);
    }
    for (b, batch) in batches.iter_mut().enumerate() {
        // samples k with k·nb/n = b
        let count = (((b + 1) * n).div_ceil(nb) - (b * n).div_ceil(nb)) as f64;
        for z in batch.iter_mut() {
            *z /= count;
        }
    }
    Ok(batches)
}

/// Monte-Carlo estimate of F over `opts.chains` independent chains.
pub fn estimate_f(domain: &FkDomain, opts: &McOptions, seed: u64) -> Result<ObservableEstimate, FkError> {
    let chains = opts.chains.max(1);
    let per_chain: Vec<usize> =
        (0..chains).map(|k| opts.n_samples / chains + usize::from(k < opts.n_samples % chains)).collect();
    let jobs = opts.jobs.max(1).min(chains);
    let mut results: Vec<Option<Result<Vec<Vec<C64>>, FkError>>> = vec![None; chains];
    std::thread::scope(|scope| {
        let chunks: Vec<_> = results.chunks_mut(chains.div_ceil(jobs)).enumerate().collect();
        let size = chains.div_ceil(jobs);
        for (j, chunk) in chunks {
            let per_chain = &per_chain;
            scope.spawn(move || {
                for (i, slot) in chunk.iter_mut().enumerate() {
                    let k = j * size + i;
                    *slot = Some(run_chain(domain, opts, seed, k, per_chain[k]));
                }
            });
        }
    });
    let mut batch_means = Vec::new();
    let mut weights = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        let batches = r.expect("chain ran")?;
        let nb = batches.len();
        for (b, batch) in batches.into_iter().enumerate() {
            let n = per_chain[k];
            weights.push((((b + 1) * n).div_ceil(nb) - (b * n).div_ceil(nb)) as f64);
            batch_means.push(batch);
        }
    }
    let nc = domain.n_corners();
    let total: f64 = weights.iter().sum();
    let mut mean = vec![C64::new(0.0, 0.0); nc];
    if total > 0.0 {
        for (batch, &w) in batch_means.iter().zip(&weights) {
            for c in 0..nc {
                mean[c] += batch[c] * (w / total);
            }
        }
    }
    let nb = batch_means.len() as f64;
    let stderr = (0..nc)
        .map(|c| {
            if nb < 2.0 {
                return f64::INFINITY;
            }
            let ss: f64 = batch_means.iter().map(|b| (b[c] - mean[c]).norm_sqr()).sum();
            (ss / (nb * (nb - 1.0))).sqrt()
        })
        .collect();
    Ok(ObservableEstimate { mean, stderr, samples: opts.n_samples, batch_means })
}

/// H reconstructed from a Monte-Carlo estimate.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HEstimate {
    pub h: Vec<f64>,
    pub stderr: Vec<f64>,
    /// largest propagation-of-squares defect per quad in units of its
    /// standard error
    pub max_propagation_z: f64,
}

/// Least-squares solution of H(v•) − H(v°) = X_c² over all corners with
/// H = 0 on the dual arc and H = 1 on the primal arc. The standard error
/// comes from repeating the fit on every batch. Fails when propagation of
/// squares is violated by more than `k_sigma` standard errors on some quad.
pub fn build_h_from_estimate(domain: &FkDomain, est: &ObservableEstimate, k_sigma: f64) -> Result<HEstimate, FkError> {
    let nc = domain.n_corners();
    if est.mean.len() != nc {
        return Err(FkError::Size { expected: nc, got: est.mean.len() });
    }
    let square = |f: &[C64]| -> Vec<f64> {
        (0..nc).map(|c| (f[c] * f[c] * domain.tau(c) * domain.corner_length(c)).re).collect()
    };
    let x2 = square(&est.mean);
    // X_c = F(c)·√(τ(c)|dS|) is real; its error is stderr·√|dS|
    let mut worst: f64 = 0.0;
    for cs in &domain.quad_corners {
        let defect = (x2[cs[0]] + x2[cs[2]] - x2[cs[1]] - x2[cs[3]]).abs();
        let var: f64 = cs
            .iter()
            .map(|&c| (2.0 * x2[c].abs().sqrt() * est.stderr[c] * domain.corner_length(c).sqrt()).powi(2))
            .sum();
        let z = if var > 0.0 {
            defect / var.sqrt()
        } else if defect > 1e-12 {
            f64::INFINITY
        } else {
            0.0
        };
        worst = worst.max(z);
    }
    if worst > k_sigma {
        return Err(FkError::Monodromy { location: "propagation of squares".into(), defect: worst });
    }
    let mut rhs_sets = vec![x2];
    for b in &est.batch_means {
        rhs_sets.push(square(b));
    }
    let sols = solve_least_squares(domain, &rhs_sets)?;
    let h = sols[0].clone();
    let nb = sols.len() - 1;
    let stderr = (0..domain.n_vertices())
        .map(|v| {
            if nb < 2 {
                return f64::INFINITY;
            }
            let m: f64 = sols[1..].iter().map(|s| s[v]).sum::<f64>() / nb as f64;
            let ss: f64 = sols[1..].iter().map(|s| (s[v] - m).powi(2)).sum();
            (ss / (nb as f64 * (nb as f64 - 1.0))).sqrt()
        })
        .collect();
    Ok(HEstimate { h, stderr, max_propagation_z: worst })
}

/// Solves the Dirichlet least-squares problem for each set of corner
/// increments, sharing one Cholesky factorisation.
fn solve_least_squares(domain: &FkDomain, increments: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, FkError> {
    let n = domain.n_vertices();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    for &v in &domain.boundary.dual_arc {
        fixed[v] = Some(0.0);
    }
    for &v in &domain.boundary.primal_arc {
        fixed[v] = Some(1.0);
    }
    let mut adj = vec![Vec::new(); n];
    for &(p, d) in &domain.corners {
        if fixed[p].is_none() && fixed[d].is_none() {
            adj[p].push(d);
            adj[d].push(p);
        }
    }
    let mut index = vec![usize::MAX; n];
    let mut free = Vec::new();
    for v in reverse_cuthill_mckee(&adj) {
        if fixed[v].is_none() {
            index[v] = free.len();
            free.push(v);
        }
    }
    let m = free.len();
    let mut coo = CooMatrix::new(m, m);
    let mut rhs = DMatrix::<f64>::zeros(m, increments.len());
    for (c, &(p, d)) in domain.corners.iter().enumerate() {
        // residual H(p) − H(d) − X_c²
        for (v, w, sign) in [(p, d, 1.0), (d, p, -1.0)] {
            if fixed[v].is_some() {
                continue;
            }
            let i = index[v];
            coo.push(i, i, 1.0);
            match fixed[w] {
                Some(val) => {
                    for (k, inc) in increments.iter().enumerate() {
                        rhs[(i, k)] += val + sign * inc[c];
                    }
                }
                None => {
                    coo.push(i, index[w], -1.0);
                    for (k, inc) in increments.iter().enumerate() {
                        rhs[(i, k)] += sign * inc[c];
                    }
                }
            }
        }
    }
    let mut out = vec![vec![0.0; n]; increments.len()];
    for o in &mut out {
        for v in 0..n {
            if let Some(val) = fixed[v] {
                o[v] = val;
            }
        }
    }
    if m > 0 {
        let csc = CscMatrix::from(&coo);
        let chol = CscCholesky::factor(&csc).map_err(|e| FkError::Solve(format!("{e:?}")))?;
        let sol = chol.solve(&rhs);
        for (k, o) in out.iter_mut().enumerate() {
            for (i, &v) in free.iter().enumerate() {
                o[v] = sol[(i, k)];
            }
        }
    }
    Ok(out)
}

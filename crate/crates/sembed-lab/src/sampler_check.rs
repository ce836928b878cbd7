//! Stationarity of the Markov chains against exact enumeration.

use sembed::fkmodel::{enumerate_exact, FkDomain, FkError, Sampler, SamplerKind};

#[derive(Clone, Debug, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    /// number of configurations minus one
    pub dof: usize,
    /// dof + 3·√(2·dof)
    pub threshold: f64,
    pub sweeps: usize,
    /// (mask, empirical frequency, exact probability, standard error)
    pub cells: Vec<(u64, f64, f64, f64)>,
}

impl ChiSquare {
    pub fn passed(&self) -> bool {
        self.statistic <= self.threshold
    }

    /// Largest |frequency − probability| in standard errors.
    pub fn max_z(&self) -> f64 {
        self.cells.iter().map(|c| (c.1 - c.2).abs() / c.3).fold(0.0, f64::max)
    }
}

/// Runs one chain for `sweeps` sweeps, recording the configuration after
/// each, and compares the visit frequencies with the exact distribution.
///
/// Successive sweeps are correlated, so the variance of each frequency is
/// taken from `batches` batch means rather than from the multinomial
/// formula; the latter only serves as a floor.
pub fn stationary_check(
    domain: &FkDomain,
    kind: SamplerKind,
    sweeps: usize,
    batches: usize,
    seed: u64,
) -> Result<ChiSquare, FkError> {
    let exact = enumerate_exact(domain, domain.n_free())?;
    let n_states = exact.probabilities().len();
    let batches = batches.clamp(2, sweeps.max(2));
    let per = sweeps / batches;
    let mut counts = vec![vec![0u32; n_states]; batches];
    let mut s = Sampler::new(domain, kind, seed, 0);
    for _ in 0..100 {
        s.sweep();
    }
    for batch in counts.iter_mut() {
        for _ in 0..per {
            s.sweep();
            batch[s.config().mask() as usize] += 1;
        }
    }
    let total = (per * batches) as f64;
    let b = batches as f64;
    let mut statistic = 0.0;
    let mut cells = Vec::with_capacity(n_states);
    for (m, &p) in exact.probabilities().iter().enumerate() {
        let means: Vec<f64> = counts.iter().map(|c| f64::from(c[m]) / per as f64).collect();
        let freq = means.iter().sum::<f64>() / b;
        let var_batch = means.iter().map(|x| (x - freq).powi(2)).sum::<f64>() / (b * (b - 1.0));
        let var = var_batch.max(p * (1.0 - p) / total).max(f64::MIN_POSITIVE);
        statistic += (freq - p).powi(2) / var;
        cells.push((m as u64, freq, p, var.sqrt()));
    }
    let dof = n_states - 1;
    Ok(ChiSquare {
        statistic,
        dof,
        threshold: dof as f64 + 3.0 * (2.0 * dof as f64).sqrt(),
        sweeps: per * batches,
        cells,
    })
}

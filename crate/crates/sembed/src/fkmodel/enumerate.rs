use super::{FkConfig, FkDomain, FkError};

/// Largest number of free edges enumerated by default.
pub const DEFAULT_ENUMERATION_CAP: usize = 22;

/// Exact FK distribution over all 2^n configurations, indexed by bit mask.
#[derive(Clone, Debug)]
pub struct ExactDistribution {
    n_free: usize,
    probs: Vec<f64>,
}

impl ExactDistribution {
    pub fn n_free(&self) -> usize {
        self.n_free
    }

    /// Probability of the configuration with the given mask.
    pub fn prob(&self, mask: u64) -> f64 {
        self.probs[mask as usize]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (FkConfig, f64)> + '_ {
        let n = self.n_free;
        self.probs.iter().enumerate().map(move |(m, &p)| (FkConfig::from_mask(n, m as u64), p))
    }
}

/// Enumerates every configuration of `domain`; `cap` bounds the number of
/// free edges.
pub fn enumerate_exact(domain: &FkDomain, cap: usize) -> Result<ExactDistribution, FkError> {
    let n = domain.n_free();
    if n > cap || n >= 63 {
        return Err(FkError::CapExceeded { free: n, cap });
    }
    let logs: Vec<f64> = (0..1u64 << n).map(|m| domain.log_weight(&FkConfig::from_mask(n, m))).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= z;
    }
    Ok(ExactDistribution { n_free: n, probs })
}

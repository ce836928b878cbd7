use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FkConfig, FkDomain};

/// Markov chain used to sample the FK measure.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SamplerKind {
    /// Single-bond heat bath; a sweep is one update per free edge.
    #[default]
    HeatBath,
    /// Edwards–Sokal (Swendsen–Wang) cluster update; a sweep is one update.
    SwendsenWang,
}

impl std::fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::HeatBath => "heat_bath",
            Self::SwendsenWang => "swendsen_wang",
        })
    }
}

impl std::str::FromStr for SamplerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "heat_bath" => Ok(Self::HeatBath),
            "swendsen_wang" => Ok(Self::SwendsenWang),
            _ => Err(format!("unknown sampler {s:?} (expected heat_bath or swendsen_wang)")),
        }
    }
}

/// One Markov chain on the configurations of a domain.
///
/// The generator is ChaCha8 keyed by the seed, with the chain index as
/// stream id, so chains with the same seed are independent.
pub struct Sampler<'a> {
    domain: &'a FkDomain,
    kind: SamplerKind,
    config: FkConfig,
    rng: ChaCha8Rng,
    /// P(open) given the endpoints are already connected / not connected
    p_joined: Vec<f64>,
    p_split: Vec<f64>,
    // breadth-first search scratch: visit stamps for both directions
    mark: Vec<u32>,
    stamp: u32,
    front: [Vec<usize>; 2],
    next: Vec<usize>,
}

impl<'a> Sampler<'a> {
    pub fn new(domain: &'a FkDomain, kind: SamplerKind, seed: u64, chain: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chain);
        let p_joined = domain.ratios.iter().map(|&r| r / (1.0 + r)).collect();
        let p_split = domain.ratios.iter().map(|&r| r / (2.0 + r)).collect();
        Self {
            domain,
            kind,
            config: FkConfig::all_closed(domain),
            rng,
            p_joined,
            p_split,
            mark: vec![0; domain.n_primal + 1],
            stamp: 0,
            front: [Vec::new(), Vec::new()],
            next: Vec::new(),
        }
    }

    pub fn config(&self) -> &FkConfig {
        &self.config
    }

    pub fn set_config(&mut self, config: FkConfig) {
        assert_eq!(config.open.len(), self.domain.n_free());
        self.config = config;
    }

    pub fn kind(&self) -> SamplerKind {
        self.kind
    }

    /// One elementary update.
    pub fn step(&mut self) {
        match self.kind {
            SamplerKind::HeatBath => self.heat_bath_step(),
            SamplerKind::SwendsenWang => self.swendsen_wang_step(),
        }
    }

    pub fn sweep(&mut self) {
        match self.kind {
            SamplerKind::HeatBath => {
                for _ in 0..self.domain.n_free() {
                    self.heat_bath_step();
                }
            }
            SamplerKind::SwendsenWang => self.swendsen_wang_step(),
        }
    }

    fn heat_bath_step(&mut self) {
        let n = self.domain.n_free();
        if n == 0 {
            return;
        }
        let q = self.rng.random_range(0..n);
        let quad = self.domain.quads[q];
        let joined = self.connected_avoiding(q, quad[0], quad[2]);
        let p = if joined { self.p_joined[q] } else { self.p_split[q] };
        self.config.open[q] = self.rng.random::<f64>() < p;
    }

    /// Primal neighbours of `v` along open edges other than `skip`; the ghost
    /// (index n_primal) is adjacent to every primal arc vertex.
    fn for_each_neighbour(&mut self, v: usize, skip: usize, side: usize) -> bool {
        let d = self.domain;
        let ghost = d.n_primal;
        let other = if side == 0 { 1 } else { 0 };
        let visit = |w: usize, mark: &mut Vec<u32>, next: &mut Vec<usize>, stamp: u32| -> bool {
            let want = stamp * 2 + side as u32;
            if mark[w] == stamp * 2 + other as u32 {
                return true;
            }
            if mark[w] != want {
                mark[w] = want;
                next.push(w);
            }
            false
        };
        let stamp = self.stamp;
        if v == ghost {
            for &w in &d.boundary.primal_arc {
                if visit(w, &mut self.mark, &mut self.next, stamp) {
                    return true;
                }
            }
            return false;
        }
        if d.on_primal_arc[v] && visit(ghost, &mut self.mark, &mut self.next, stamp) {
            return true;
        }
        for &(q, w) in &d.primal_adj[v] {
            if q != skip && self.config.open[q] && visit(w, &mut self.mark, &mut self.next, stamp) {
                return true;
            }
        }
        false
    }

    /// Bidirectional breadth-first search between `u` and `w` in the open
    /// subgraph without edge `skip`.
    fn connected_avoiding(&mut self, skip: usize, u: usize, w: usize) -> bool {
        if u == w {
            return true;
        }
        // stamps 2s and 2s+1 mark the two search directions
        self.stamp += 1;
        if self.stamp >= u32::MAX / 2 - 1 {
            self.mark.fill(0);
            self.stamp = 1;
        }
        self.mark[u] = self.stamp * 2;
        self.mark[w] = self.stamp * 2 + 1;
        self.front[0].clear();
        self.front[1].clear();
        self.front[0].push(u);
        self.front[1].push(w);
        loop {
            let side = if self.front[0].len() <= self.front[1].len() { 0 } else { 1 };
            if self.front[side].is_empty() {
                return false;
            }
            self.next.clear();
            let current = std::mem::take(&mut self.front[side]);
            for &v in &current {
                if self.for_each_neighbour(v, skip, side) {
                    self.front[side] = current;
                    return true;
                }
            }
            self.front[side] = current;
            std::mem::swap(&mut self.front[side], &mut self.next);
        }
    }

    fn swendsen_wang_step(&mut self) {
        let d = self.domain;
        let ghost = d.n_primal;
        let mut uf = d.primal_clusters(&self.config);
        // spin per cluster root: the wired cluster is fixed to +1
        let root_g = uf.find(ghost);
        let mut spin = vec![0i8; d.n_primal + 1];
        let mut vertex_spin = vec![0i8; d.n_primal];
        for (v, slot) in vertex_spin.iter_mut().enumerate() {
            let r = uf.find(v);
            if spin[r] == 0 {
                spin[r] = if r == root_g || self.rng.random::<bool>() { 1 } else { -1 };
            }
            *slot = spin[r];
        }
        for (q, quad) in d.quads.iter().enumerate() {
            self.config.open[q] =
                vertex_spin[quad[0]] == vertex_spin[quad[2]] && self.rng.random::<f64>() < self.p_joined[q];
        }
    }
}

/// Single-bond heat-bath stream: the configuration after each of `steps`
/// updates, starting from all edges closed.
pub fn mcmc_sample(domain: &FkDomain, steps: usize, seed: u64) -> impl Iterator<Item = FkConfig> + '_ {
    let mut s = Sampler::new(domain, SamplerKind::HeatBath, seed, 0);
    (0..steps).map(move |_| {
        s.step();
        s.config.clone()
    })
}

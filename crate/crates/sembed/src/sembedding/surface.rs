use std::f64::consts::PI;

/// Height function ϑ of a space-like graph surface in ℝ^{2,1}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SurfaceKind {
    Flat,
    /// ϑ = a·x + b·y
    Tilted {
        a: f64,
        b: f64,
    },
    /// ϑ = c·asinh(r/c), the Lorentzian catenoid
    Catenoid {
        c: f64,
    },
}

/// Planar parameter domain of a surface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    Rect {
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
    },
    /// `r0 ≤ r ≤ r1`, `phi0 ≤ φ ≤ phi1`
    AnnularSector {
        r0: f64,
        r1: f64,
        phi0: f64,
        phi1: f64,
    },
}

impl Domain {
    pub fn unit_square() -> Self {
        Domain::Rect { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        match *self {
            Domain::Rect { x0, x1, y0, y1 } => p[0] >= x0 && p[0] <= x1 && p[1] >= y0 && p[1] <= y1,
            Domain::AnnularSector { r0, r1, phi0, phi1 } => {
                let r = p[0].hypot(p[1]);
                let phi = p[1].atan2(p[0]);
                r >= r0 && r <= r1 && phi >= phi0 && phi <= phi1
            }
        }
    }

    /// Counterclockwise boundary polygon; arcs are sampled with `per_arc` segments.
    pub fn boundary_polygon(&self, per_arc: usize) -> Vec<[f64; 2]> {
        match *self {
            Domain::Rect { x0, x1, y0, y1 } => vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]],
            Domain::AnnularSector { r0, r1, phi0, phi1 } => {
                let n = per_arc.max(1);
                let mut out = Vec::with_capacity(2 * n + 2);
                for k in 0..=n {
                    let t = phi0 + (phi1 - phi0) * k as f64 / n as f64;
                    out.push([r1 * t.cos(), r1 * t.sin()]);
                }
                for k in (0..=n).rev() {
                    let t = phi0 + (phi1 - phi0) * k as f64 / n as f64;
                    out.push([r0 * t.cos(), r0 * t.sin()]);
                }
                out
            }
        }
    }

    /// Regular sample of `n × n` points covering the domain (boundary included).
    pub fn sample(&self, n: usize) -> Vec<[f64; 2]> {
        let n = n.max(2);
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let (s, t) = (i as f64 / (n - 1) as f64, j as f64 / (n - 1) as f64);
                out.push(match *self {
                    Domain::Rect { x0, x1, y0, y1 } => [x0 + s * (x1 - x0), y0 + t * (y1 - y0)],
                    Domain::AnnularSector { r0, r1, phi0, phi1 } => {
                        let (r, phi) = (r0 + s * (r1 - r0), phi0 + t * (phi1 - phi0));
                        [r * phi.cos(), r * phi.sin()]
                    }
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SurfaceError {
    #[error("surface is not space-like: |∇ϑ| = {0} ≥ 1")]
    NotSpacelike(f64),
    #[error("catenoid domain must avoid the axis r = 0")]
    Axis,
    #[error("invalid surface parameter: {0}")]
    Parameter(String),
}

/// A surface ϑ over a planar domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceSpec {
    pub kind: SurfaceKind,
    pub domain: Domain,
}

impl SurfaceSpec {
    pub fn new(kind: SurfaceKind, domain: Domain) -> Result<Self, SurfaceError> {
        let s = Self { kind, domain };
        if let SurfaceKind::Catenoid { c } = kind {
            if c <= 0.0 {
                return Err(SurfaceError::Parameter(format!("catenoid c = {c}")));
            }
            let near_axis = match domain {
                Domain::AnnularSector { r0, .. } => r0 <= 0.0,
                Domain::Rect { x0, x1, y0, y1 } => x0 <= 0.0 && x1 >= 0.0 && y0 <= 0.0 && y1 >= 0.0,
            };
            if near_axis {
                return Err(SurfaceError::Axis);
            }
        }
        let k = s.kappa();
        if k >= 1.0 {
            return Err(SurfaceError::NotSpacelike(k));
        }
        Ok(s)
    }

    pub fn flat(domain: Domain) -> Self {
        Self { kind: SurfaceKind::Flat, domain }
    }

    pub fn theta(&self, p: [f64; 2]) -> f64 {
        match self.kind {
            SurfaceKind::Flat => 0.0,
            SurfaceKind::Tilted { a, b } => a * p[0] + b * p[1],
            SurfaceKind::Catenoid { c } => c * (p[0].hypot(p[1]) / c).asinh(),
        }
    }

    pub fn grad(&self, p: [f64; 2]) -> [f64; 2] {
        match self.kind {
            SurfaceKind::Flat => [0.0, 0.0],
            SurfaceKind::Tilted { a, b } => [a, b],
            SurfaceKind::Catenoid { c } => {
                let f = catenoid_slope_over_r(c, p);
                [p[0] * f, p[1] * f]
            }
        }
    }

    pub fn hess(&self, p: [f64; 2]) -> [[f64; 2]; 2] {
        match self.kind {
            SurfaceKind::Flat | SurfaceKind::Tilted { .. } => [[0.0; 2]; 2],
            SurfaceKind::Catenoid { c } => {
                // ϑ'' r̂r̂ᵀ + (ϑ'/r)(I − r̂r̂ᵀ)
                let r2 = p[0] * p[0] + p[1] * p[1];
                let m = r2 + c * c;
                let f = catenoid_slope_over_r(c, p);
                let second = -c * r2.sqrt() / (m * m.sqrt());
                let k = (second - f) / r2;
                [[f + k * p[0] * p[0], k * p[0] * p[1]], [k * p[0] * p[1], f + k * p[1] * p[1]]]
            }
        }
    }

    /// sup |∇ϑ| over the domain.
    pub fn kappa(&self) -> f64 {
        match (self.kind, self.domain) {
            (SurfaceKind::Flat, _) => 0.0,
            (SurfaceKind::Tilted { a, b }, _) => a.hypot(b),
            (SurfaceKind::Catenoid { c }, Domain::AnnularSector { r0, .. }) => catenoid_slope(c, r0),
            (SurfaceKind::Catenoid { c }, Domain::Rect { x0, x1, y0, y1 }) => {
                // slope decreases with r: take the point of the rectangle nearest the axis
                let r = (0.0f64.clamp(x0, x1)).hypot(0.0f64.clamp(y0, y1));
                catenoid_slope(c, r)
            }
        }
    }

    /// Metric g = I − ∇ϑ∇ϑᵀ induced by dx² + dy² − dϑ².
    pub fn metric(&self, p: [f64; 2]) -> [[f64; 2]; 2] {
        let g = self.grad(p);
        [[1.0 - g[0] * g[0], -g[0] * g[1]], [-g[0] * g[1], 1.0 - g[1] * g[1]]]
    }
}

/// ϑ'(r) = c/√(r² + c²).
fn catenoid_slope(c: f64, r: f64) -> f64 {
    c / (r * r + c * c).sqrt()
}

fn catenoid_slope_over_r(c: f64, p: [f64; 2]) -> f64 {
    let r2 = p[0] * p[0] + p[1] * p[1];
    c / (r2 * (r2 + c * c)).sqrt()
}

/// Quarter-annulus catenoid sector used by the non-flat studies.
pub fn catenoid_sector(c: f64) -> SurfaceSpec {
    SurfaceSpec::new(SurfaceKind::Catenoid { c }, Domain::AnnularSector { r0: 0.5, r1: 1.5, phi0: 0.0, phi1: PI / 2.0 })
        .expect("catenoid sector is space-like")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(s: &SurfaceSpec, p: [f64; 2]) {
        let h = 1e-5;
        let g = s.grad(p);
        let hs = s.hess(p);
        for i in 0..2 {
            let mut a = p;
            let mut b = p;
            a[i] += h;
            b[i] -= h;
            let dg = (s.theta(a) - s.theta(b)) / (2.0 * h);
            assert!((dg - g[i]).abs() < 1e-8, "grad {i}: {dg} vs {}", g[i]);
            let (ga, gb) = (s.grad(a), s.grad(b));
            for j in 0..2 {
                let dh = (ga[j] - gb[j]) / (2.0 * h);
                assert!((dh - hs[i][j]).abs() < 1e-7, "hess {i}{j}: {dh} vs {}", hs[i][j]);
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let cat = catenoid_sector(1.0);
        for p in [[0.7, 0.2], [1.0, 0.0], [0.3, 1.2]] {
            fd_check(&cat, p);
        }
        let t = SurfaceSpec::new(SurfaceKind::Tilted { a: 0.3, b: 0.2 }, Domain::unit_square()).unwrap();
        fd_check(&t, [0.4, 0.6]);
    }

    #[test]
    fn kappa_and_spacelike_gate() {
        let cat = catenoid_sector(1.0);
        assert!((cat.kappa() - 1.0 / 1.25f64.sqrt()).abs() < 1e-15);
        let ok = SurfaceSpec::new(SurfaceKind::Tilted { a: 0.5, b: 0.5 }, Domain::unit_square());
        assert!(ok.is_ok());
        let bad = SurfaceSpec::new(SurfaceKind::Tilted { a: 0.8, b: 0.8 }, Domain::unit_square());
        assert!(matches!(bad, Err(SurfaceError::NotSpacelike(_))));
        let axis = SurfaceSpec::new(SurfaceKind::Catenoid { c: 1.0 }, Domain::unit_square());
        assert_eq!(axis, Err(SurfaceError::Axis));
    }

    #[test]
    fn metric_is_positive_definite_on_samples() {
        let cat = catenoid_sector(1.0);
        let k = cat.kappa();
        for p in cat.domain.sample(40) {
            let g = cat.metric(p);
            let tr = g[0][0] + g[1][1];
            let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
            let lmin = tr / 2.0 - ((tr / 2.0).powi(2) - det).max(0.0).sqrt();
            assert!(lmin >= 1.0 - k * k - 1e-12);
        }
    }
}

use nalgebra::{Matrix3, Vector3};
use rand::Rng;

/// η = diag(1, 1, −1).
pub fn eta() -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0))
}

/// ⟨u, v⟩ in ℝ^{2,1}.
pub fn minkowski_dot(u: &Vector3<f64>, v: &Vector3<f64>) -> f64 {
    u.x * v.x + u.y * v.y - u.z * v.z
}

/// Vector orthogonal to `u` and `v` for the Minkowski product.
pub fn minkowski_cross(u: &Vector3<f64>, v: &Vector3<f64>) -> Vector3<f64> {
    eta() * u.cross(v)
}

/// An isometry `p ↦ A p + t` of ℝ^{2,1}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LorentzMap {
    pub a: Matrix3<f64>,
    pub t: Vector3<f64>,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum LorentzError {
    #[error("matrix does not preserve the Minkowski form (defect {0:e})")]
    NotIsometry(f64),
    #[error("|det A| differs from 1 by {0:e}")]
    Determinant(f64),
    #[error("map reverses time orientation")]
    TimeReversing,
    #[error("boost velocity must have norm below 1")]
    Superluminal,
}

const ISOMETRY_TOL: f64 = 1e-12;

impl LorentzMap {
    pub fn identity() -> Self {
        Self { a: Matrix3::identity(), t: Vector3::zeros() }
    }

    /// Checks `Aᵀ η A = η`, `det A = ±1` and `A₃₃ > 0`.
    pub fn new(a: Matrix3<f64>, t: Vector3<f64>) -> Result<Self, LorentzError> {
        let m = Self { a, t };
        m.check()?;
        Ok(m)
    }

    pub fn check(&self) -> Result<(), LorentzError> {
        let defect = (self.a.transpose() * eta() * self.a - eta()).abs().max();
        if defect > ISOMETRY_TOL {
            return Err(LorentzError::NotIsometry(defect));
        }
        let det = (self.a.determinant().abs() - 1.0).abs();
        if det > ISOMETRY_TOL {
            return Err(LorentzError::Determinant(det));
        }
        if self.a[(2, 2)] <= 0.0 {
            return Err(LorentzError::TimeReversing);
        }
        Ok(())
    }

    /// Pure boost bringing the unit future vector `γ·(v, 1)` to `(0, 0, 1)`.
    pub fn boost(vx: f64, vy: f64) -> Result<Self, LorentzError> {
        let v2 = vx * vx + vy * vy;
        if v2 >= 1.0 {
            return Err(LorentzError::Superluminal);
        }
        let g = 1.0 / (1.0 - v2).sqrt();
        // (γ − 1)/v² written without cancellation
        let k = g * g / (1.0 + g);
        let a = Matrix3::new(
            1.0 + k * vx * vx,
            k * vx * vy,
            -g * vx,
            k * vx * vy,
            1.0 + k * vy * vy,
            -g * vy,
            -g * vx,
            -g * vy,
            g,
        );
        Ok(Self { a, t: Vector3::zeros() })
    }

    /// Boost in the x–q plane with velocity β (rapidity artanh β).
    pub fn boost_x(beta: f64) -> Result<Self, LorentzError> {
        Self::boost(beta, 0.0)
    }

    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { a: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0), t: Vector3::zeros() }
    }

    pub fn translation(t: Vector3<f64>) -> Self {
        Self { a: Matrix3::identity(), t }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self { a: self.a * other.a, t: self.a * other.t + self.t }
    }

    pub fn inverse(&self) -> Self {
        // A⁻¹ = η Aᵀ η for isometries
        let ai = eta() * self.a.transpose() * eta();
        Self { a: ai, t: -(ai * self.t) }
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.a * p + self.t
    }

    /// Random orthochronous isometry: rotation, boost of speed at most
    /// `max_beta`, rotation, and a translation with entries in [−1, 1].
    pub fn random<R: Rng + ?Sized>(rng: &mut R, max_beta: f64) -> Self {
        let two_pi = std::f64::consts::TAU;
        let speed = rng.random::<f64>() * max_beta;
        let dir = rng.random::<f64>() * two_pi;
        let b = Self::boost(speed * dir.cos(), speed * dir.sin()).expect("speed below one");
        let r1 = Self::rotation(rng.random::<f64>() * two_pi);
        let r2 = Self::rotation(rng.random::<f64>() * two_pi);
        let t = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        Self::translation(t).compose(&r2.compose(&b.compose(&r1)))
    }
}

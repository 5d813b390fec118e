//! The von Mises-Fisher family `p_θ(x) = exp(θᵀx − κ(‖θ‖))` on S².
//!
//! The sufficient statistic is `s(x) = x`, so moments, the Fisher metric and the
//! expectations that drive the projection ODEs all have closed forms in terms of
//! κ', κ'' and the projectors onto θ and its orthogonal complement. At θ = 0
//! (the uniform distribution) the projectors are undefined and every quantity is
//! replaced by its continuity limit.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere_math::{kappa_all, projectors, sample_uniform_sphere, KappaValues, Mat3, Vec3};

/// Natural parameter of a von Mises-Fisher density on S².
///
/// The direction `θ/‖θ‖` is the mode and `‖θ‖` the concentration; `θ = 0` is the
/// uniform distribution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NaturalParam(pub Vec3);

impl NaturalParam {
    pub const UNIFORM: NaturalParam = NaturalParam(Vec3::new(0.0, 0.0, 0.0));

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        NaturalParam(Vec3::new(x, y, z))
    }

    #[inline]
    pub fn vector(&self) -> &Vec3 {
        &self.0
    }

    /// Concentration `β = ‖θ‖`.
    #[inline]
    pub fn concentration(&self) -> f64 {
        self.0.norm()
    }

    /// Mode `μ = θ/‖θ‖`.
    pub fn mode(&self) -> Result<Vec3> {
        let r = self.concentration();
        if r == 0.0 {
            return Err(Error::DegenerateParameter);
        }
        Ok(self.0 / r)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// κ values at `‖θ‖`; NaN for a non-finite parameter so callers propagate it.
    pub(crate) fn kappa(&self) -> KappaValues {
        kappa_all(self.concentration()).unwrap_or(KappaValues {
            kappa: f64::NAN,
            kappa_prime: f64::NAN,
            kappa_double_prime: f64::NAN,
        })
    }
}

/// Accelerometer model `Y | X ∼ N(g·X, α² I)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementModel {
    /// Local gravity constant (m/s²).
    pub gain_g: f64,
    /// Measurement noise variance per axis (m²/s⁴).
    pub alpha2: f64,
}

impl MeasurementModel {
    pub fn new(gain_g: f64, alpha2: f64) -> Result<Self> {
        let model = MeasurementModel { gain_g, alpha2 };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gain_g > 0.0 && self.gain_g.is_finite()) {
            return Err(Error::Config(format!(
                "gain_g must be positive, got {}",
                self.gain_g
            )));
        }
        if !(self.alpha2 > 0.0 && self.alpha2.is_finite()) {
            return Err(Error::Config(format!(
                "alpha2 must be positive, got {}",
                self.alpha2
            )));
        }
        Ok(())
    }
}

/// `E_θ[X] = κ'(‖θ‖) θ/‖θ‖`.
pub fn expected_statistic(theta: &NaturalParam) -> Vec3 {
    let r = theta.concentration();
    if r == 0.0 {
        return Vec3::zeros();
    }
    theta.0 * (theta.kappa().kappa_prime / r)
}

/// Fisher information `g(θ) = κ'/‖θ‖ P_⊥ + κ'' P`, equal to `Cov_θ[X]`.
pub fn fisher(theta: &NaturalParam) -> Mat3 {
    let r = theta.concentration();
    if r == 0.0 {
        return Mat3::identity() / 3.0;
    }
    let Ok((p, p_perp)) = projectors(&theta.0) else {
        return Mat3::from_element(f64::NAN);
    };
    let k = theta.kappa();
    p_perp * (k.kappa_prime / r) + p * k.kappa_double_prime
}

/// Inverse Fisher information `‖θ‖/κ' P_⊥ + 1/κ'' P`.
pub fn fisher_inv(theta: &NaturalParam) -> Mat3 {
    let r = theta.concentration();
    if r == 0.0 {
        return Mat3::identity() * 3.0;
    }
    let Ok((p, p_perp)) = projectors(&theta.0) else {
        return Mat3::from_element(f64::NAN);
    };
    let k = theta.kappa();
    p_perp * (r / k.kappa_prime) + p / k.kappa_double_prime
}

/// Conjugate measurement update. On S², `exp(−‖y − g x‖²/2α²) ∝ exp((g/α²) yᵀx)`.
pub fn bayes_update(theta: &NaturalParam, y: &Vec3, model: &MeasurementModel) -> NaturalParam {
    NaturalParam(theta.0 + y * (model.gain_g / model.alpha2))
}

/// Exact draw from `p_θ`.
///
/// The axial coordinate `t = μᵀx` has density ∝ `exp(‖θ‖ t)` on [−1, 1], which
/// has a closed-form inverse CDF; the azimuth is uniform.
pub fn sample_vmf<R: Rng + ?Sized>(theta: &NaturalParam, rng: &mut R) -> Vec3 {
    let beta = theta.concentration();
    if beta == 0.0 {
        return sample_uniform_sphere(rng);
    }
    let mu = theta.0 / beta;
    let u: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
                                            // t = 1 + log(u + (1 − u) e^{−2β}) / β
    let t = (1.0 + ((1.0 - u) * (-2.0 * beta).exp_m1()).ln_1p() / beta).clamp(-1.0, 1.0);
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    let (e1, e2) = orthonormal_complement(&mu);
    let radial = (1.0 - t * t).max(0.0).sqrt();
    let x = mu * t + (e1 * phi.cos() + e2 * phi.sin()) * radial;
    x / x.norm()
}

/// Two unit vectors completing `mu` to a right-handed orthonormal basis.
pub(crate) fn orthonormal_complement(mu: &Vec3) -> (Vec3, Vec3) {
    let helper = if mu.x.abs() < 0.9 {
        Vec3::x()
    } else {
        Vec3::y()
    };
    let e1 = mu.cross(&helper).normalize();
    let e2 = mu.cross(&e1);
    (e1, e2)
}

/// `E_θ[𝒢 s]` for the sphere dynamics; the generator applied to `s(x) = x` has no
/// second-order term, leaving `−(Ω̆× + γ² I) E_θ[X]`.
pub fn expected_generator_statistic(theta: &NaturalParam, omega: &Vec3, gamma2: f64) -> Vec3 {
    let m = expected_statistic(theta);
    -omega.cross(&m) - m * gamma2
}

/// `E_θ[Q(X)] = γ² (I − E_θ[XXᵀ])`, using `E[XXᵀ] = g(θ) + E[X]E[X]ᵀ`.
pub fn expected_process_noise(theta: &NaturalParam, gamma2: f64) -> Mat3 {
    let r = theta.concentration();
    if r == 0.0 {
        return Mat3::identity() * (2.0 * gamma2 / 3.0);
    }
    let Ok((p, p_perp)) = projectors(&theta.0) else {
        return Mat3::from_element(f64::NAN);
    };
    let k = theta.kappa();
    let perp = 1.0 - k.kappa_prime / r;
    let along = 1.0 - k.kappa_double_prime - k.kappa_prime * k.kappa_prime;
    (p_perp * perp + p * along) * gamma2
}

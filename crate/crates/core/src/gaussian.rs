//! Continuous-discrete Gaussian filter and smoother used as the baseline.
//!
//! Given the gyro reading the drift of the sphere SDE is linear, `A = −[Ω̆]_× − γ² I`,
//! and the diffusion matrix `Q(x) = γ²(‖x‖² I − xxᵀ)` is quadratic in `x`, so its
//! Gaussian expectation is exact:
//!
//! ```text
//! Q̄(m, P) = γ² ((tr P + ‖m‖²) I − P − mmᵀ)
//! ṁ = A m,   Ṗ = A P + P Aᵀ + Q̄
//! ```
//!
//! The smoother integrates backward from the filter's terminal belief:
//!
//! ```text
//! ṁ_s = A m_s + Q̄_f P_f⁻¹ (m_s − m_f)
//! Ṗ_s = (A + Q̄_f P_f⁻¹) P_s + P_s (A + Q̄_f P_f⁻¹)ᵀ − Q̄_f
//! ```
//!
//! with `Q̄_f` evaluated at the filter moments, interpolated inside each grid
//! interval like the VMF smoother does. Point estimates are the means
//! projected onto the sphere.

use std::cell::Cell;
use std::path::Path;

use nalgebra::SVector;

use crate::dynamics::Scenario;
use crate::error::{Error, Result};
use crate::ode::rk4_step;
use crate::projection::{hermite, write_trajectory_csv};
use crate::sphere_math::{skew, Mat3, Vec3};
use crate::vmf::MeasurementModel;

type Packed = SVector<f64, 12>;

const COV_REGULARIZATION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBelief {
    pub mean: Vec3,
    pub cov: Mat3,
}

impl GaussianBelief {
    /// Moment match of the uniform distribution on S²: mean 0, covariance I/3.
    pub fn uniform_sphere() -> Self {
        GaussianBelief {
            mean: Vec3::zeros(),
            cov: Mat3::identity() / 3.0,
        }
    }

    fn pack(&self) -> Packed {
        let mut v = Packed::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&self.mean);
        v.fixed_rows_mut::<9>(3)
            .copy_from_slice(self.cov.as_slice());
        v
    }

    fn unpack(v: &Packed) -> Self {
        GaussianBelief {
            mean: v.fixed_rows::<3>(0).into_owned(),
            cov: symmetrize(&Mat3::from_column_slice(v.fixed_rows::<9>(3).as_slice())),
        }
    }

    fn is_finite(&self) -> bool {
        self.mean
            .iter()
            .chain(self.cov.iter())
            .all(|v| v.is_finite())
    }
}

#[inline]
fn symmetrize(p: &Mat3) -> Mat3 {
    (p + p.transpose()) * 0.5
}

fn drift_matrix(omega: &Vec3, gamma2: f64) -> Mat3 {
    -skew(omega) - Mat3::identity() * gamma2
}

/// `E[Q(X)]` for `X ∼ N(m, P)`.
pub fn expected_diffusion(mean: &Vec3, cov: &Mat3, gamma2: f64) -> Mat3 {
    let second = cov.trace() + mean.norm_squared();
    (Mat3::identity() * second - cov - mean * mean.transpose()) * gamma2
}

/// Moment ODE right-hand side `(ṁ, Ṗ)`.
pub fn gf_predict_rhs(belief: &GaussianBelief, omega: &Vec3, gamma2: f64) -> (Vec3, Mat3) {
    let a = drift_matrix(omega, gamma2);
    let q = expected_diffusion(&belief.mean, &belief.cov, gamma2);
    (
        a * belief.mean,
        a * belief.cov + belief.cov * a.transpose() + q,
    )
}

/// Kalman update for `y = g x + v`, `v ∼ N(0, α² I)`.
pub fn kalman_update(
    belief: &GaussianBelief,
    y: &Vec3,
    model: &MeasurementModel,
) -> GaussianBelief {
    let g = model.gain_g;
    let p = &belief.cov;
    let s = p * (g * g) + Mat3::identity() * model.alpha2;
    // K = g P S⁻¹, and with P, S symmetric Kᵀ = g S⁻¹ P.
    let chol = s
        .cholesky()
        .expect("innovation covariance is positive definite");
    let gain = (chol.solve(p) * g).transpose();
    let mean = belief.mean + gain * (y - belief.mean * g);
    let cov = (Mat3::identity() - gain * g) * p;
    GaussianBelief {
        mean,
        cov: symmetrize(&cov),
    }
}

/// `m / ‖m‖`.
pub fn norm_constrained_estimate(m: &Vec3) -> Result<Vec3> {
    let n = m.norm();
    if !(n > 1e-12) {
        return Err(Error::DegenerateMean { norm: n });
    }
    Ok(m / n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFilterTrajectory {
    pub times: Vec<f64>,
    /// Belief after any update at each grid point.
    pub beliefs: Vec<GaussianBelief>,
    /// Belief before any update at each grid point.
    pub predicted: Vec<GaussianBelief>,
    pub update_flags: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSmootherTrajectory {
    pub times: Vec<f64>,
    pub beliefs: Vec<GaussianBelief>,
}

fn blowup(t: f64, what: &str) -> Error {
    Error::NumericalBlowup {
        t,
        detail: format!("non-finite {what} belief"),
    }
}

pub fn run_gaussian_filter(
    scenario: &Scenario,
    gamma2: f64,
    model: &MeasurementModel,
    belief0: GaussianBelief,
) -> Result<GaussianFilterTrajectory> {
    if scenario.is_empty() {
        return Err(Error::EmptyInput("scenario has no grid points"));
    }
    let n = scenario.len();
    let slots = scenario.measurement_slots();
    let mut beliefs = Vec::with_capacity(n);
    let mut predicted = Vec::with_capacity(n);
    let mut update_flags = Vec::with_capacity(n);

    let mut belief = belief0;
    for i in 0..n {
        if i > 0 {
            let (t0, t1) = (scenario.times[i - 1], scenario.times[i]);
            let omega = scenario.gyro[i - 1];
            let rhs = |_: f64, y: &Packed| {
                let (dm, dp) = gf_predict_rhs(&GaussianBelief::unpack(y), &omega, gamma2);
                GaussianBelief { mean: dm, cov: dp }.pack()
            };
            belief = GaussianBelief::unpack(&rk4_step(rhs, t0, &belief.pack(), t1 - t0)?);
        }
        predicted.push(belief);
        if let Some(y) = slots[i] {
            belief = kalman_update(&belief, &y, model);
        }
        if !belief.is_finite() {
            return Err(blowup(scenario.times[i], "filter"));
        }
        beliefs.push(belief);
        update_flags.push(slots[i].is_some());
    }
    Ok(GaussianFilterTrajectory {
        times: scenario.times.clone(),
        beliefs,
        predicted,
        update_flags,
    })
}

fn inverse_spd(p: &Mat3, t: f64) -> Result<Mat3> {
    if let Some(c) = p.cholesky() {
        return Ok(c.inverse());
    }
    (p + Mat3::identity() * COV_REGULARIZATION)
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::NumericalBlowup {
            t,
            detail: "filter covariance is singular beyond regularisation".into(),
        })
}

/// Largest `h·‖A + Q̄ P⁻¹‖` taken in one backward RK4 step.
const MAX_STEP_STIFFNESS: f64 = 0.5;
const MAX_SUBSTEPS: usize = 4096;

fn stiff_substeps(h: f64, a: &Mat3, filter: &GaussianBelief, gamma2: f64, t: f64) -> Result<usize> {
    let q = expected_diffusion(&filter.mean, &filter.cov, gamma2);
    let rate = (a + q * inverse_spd(&filter.cov, t)?).norm();
    let n = (h * rate / MAX_STEP_STIFFNESS).ceil();
    Ok(if n.is_finite() && n >= 1.0 {
        (n as usize).min(MAX_SUBSTEPS)
    } else {
        1
    })
}

pub fn run_gaussian_smoother(
    filter: &GaussianFilterTrajectory,
    scenario: &Scenario,
    gamma2: f64,
) -> Result<GaussianSmootherTrajectory> {
    let n = filter.times.len();
    if n == 0 {
        return Err(Error::EmptyInput("filter trajectory is empty"));
    }
    if n != scenario.len() {
        return Err(Error::Domain(format!(
            "filter has {n} points but the scenario grid has {}",
            scenario.len()
        )));
    }
    let mut out = vec![filter.beliefs[n - 1]; n];
    let mut current = filter.beliefs[n - 1].pack();

    for i in (0..n - 1).rev() {
        let (t0, t1) = (filter.times[i], filter.times[i + 1]);
        let h = t1 - t0;
        let left = filter.beliefs[i];
        let right = filter.predicted[i + 1];
        let a = drift_matrix(&scenario.gyro[i], gamma2);
        let failure = Cell::new(None);
        // Reversed time u = −t.
        let (left_packed, right_packed) = (left.pack(), right.pack());
        let slope = |b: &GaussianBelief| {
            let (dm, dp) = gf_predict_rhs(b, &scenario.gyro[i], gamma2);
            GaussianBelief { mean: dm, cov: dp }.pack()
        };
        let (left_slope, right_slope) = (slope(&left), slope(&right));
        let rhs = |u: f64, y: &Packed| {
            let t = -u;
            let f = GaussianBelief::unpack(&hermite(
                &left_packed,
                &left_slope,
                &right_packed,
                &right_slope,
                h,
                (t - t0) / h,
            ));
            let s = GaussianBelief::unpack(y);
            let q = expected_diffusion(&f.mean, &f.cov, gamma2);
            let pinv = match inverse_spd(&f.cov, t) {
                Ok(m) => m,
                Err(e) => {
                    failure.set(Some(e));
                    return Packed::from_element(f64::NAN);
                }
            };
            let b = a + q * pinv;
            let dm = a * s.mean + q * pinv * (s.mean - f.mean);
            let dp = b * s.cov + s.cov * b.transpose() - q;
            -GaussianBelief { mean: dm, cov: dp }.pack()
        };
        let sub = stiff_substeps(h, &a, &left, gamma2, t0)?;
        let hs = h / sub as f64;
        for k in 0..sub {
            let step = rk4_step(&rhs, -t1 + k as f64 * hs, &current, hs);
            if let Some(e) = failure.take() {
                return Err(e);
            }
            current = step.map_err(|e| match e {
                Error::NumericalBlowup { t, detail } => Error::NumericalBlowup { t: -t, detail },
                e => e,
            })?;
        }
        let b = GaussianBelief::unpack(&current);
        if !b.is_finite() {
            return Err(blowup(t0, "smoother"));
        }
        current = b.pack();
        out[i] = b;
    }
    Ok(GaussianSmootherTrajectory {
        times: filter.times.clone(),
        beliefs: out,
    })
}

fn estimates(beliefs: &[GaussianBelief]) -> Vec<Option<Vec3>> {
    beliefs
        .iter()
        .map(|b| norm_constrained_estimate(&b.mean).ok())
        .collect()
}

fn write_beliefs(path: &Path, times: &[f64], beliefs: &[GaussianBelief]) -> Result<()> {
    let means: Vec<Vec3> = beliefs.iter().map(|b| b.mean).collect();
    write_trajectory_csv(path, times, &means, &estimates(beliefs))
}

impl GaussianFilterTrajectory {
    pub fn estimates(&self) -> Vec<Option<Vec3>> {
        estimates(&self.beliefs)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_beliefs(path, &self.times, &self.beliefs)
    }
}

impl GaussianSmootherTrajectory {
    pub fn estimates(&self) -> Vec<Option<Vec3>> {
        estimates(&self.beliefs)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_beliefs(path, &self.times, &self.beliefs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{simulate_scenario, ScenarioConfig};
    use crate::sphere_math::angular_error_deg;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(a: f64, b: f64, c: f64) -> Mat3 {
        Mat3::from_diagonal(&Vec3::new(a, b, c))
    }

    #[test]
    fn predict_rhs_examples() {
        let b = GaussianBelief {
            mean: Vec3::z(),
            cov: Mat3::zeros(),
        };
        let (dm, dp) = gf_predict_rhs(&b, &Vec3::zeros(), 0.01);
        assert_relative_eq!(dm, Vec3::new(0.0, 0.0, -0.01));
        assert_relative_eq!(dp, diag(0.01, 0.01, 0.0));

        let b = GaussianBelief {
            mean: Vec3::new(0.2, 0.3, -0.1),
            cov: diag(0.1, 0.2, 0.3),
        };
        let (dm, dp) = gf_predict_rhs(&b, &Vec3::zeros(), 0.0);
        assert_eq!(dm, Vec3::zeros());
        assert_eq!(dp, Mat3::zeros());

        let w = 1.7;
        let b = GaussianBelief {
            mean: Vec3::x(),
            cov: Mat3::zeros(),
        };
        let (dm, _) = gf_predict_rhs(&b, &Vec3::new(0.0, 0.0, w), 0.0);
        assert_relative_eq!(dm, Vec3::new(0.0, -w, 0.0));
    }

    #[test]
    fn kalman_examples() {
        let model = MeasurementModel::new(9.82, 1e-2).unwrap();
        let b = GaussianBelief {
            mean: Vec3::new(0.1, 0.7, 0.2),
            cov: diag(0.1, 0.05, 0.2),
        };
        let post = kalman_update(&b, &(b.mean * 9.82), &model);
        assert_relative_eq!(post.mean, b.mean, epsilon = 1e-15);

        let sigma2 = 0.25;
        let prior = GaussianBelief {
            mean: Vec3::zeros(),
            cov: Mat3::identity() * sigma2,
        };
        let y = Vec3::new(1.0, -2.0, 9.0);
        let post = kalman_update(&prior, &y, &model);
        let k = 9.82 * sigma2 / (9.82 * 9.82 * sigma2 + 1e-2);
        assert_relative_eq!(post.mean, y * k, max_relative = 1e-14);

        let vague = MeasurementModel::new(9.82, 1e30).unwrap();
        let post = kalman_update(&b, &y, &vague);
        assert_relative_eq!(post.mean, b.mean, epsilon = 1e-12);
        assert_relative_eq!(post.cov, b.cov, epsilon = 1e-12);
    }

    #[test]
    fn norm_constrained_examples() {
        assert_eq!(
            norm_constrained_estimate(&Vec3::new(0.0, 0.0, 2.0)).unwrap(),
            Vec3::z()
        );
        assert_relative_eq!(
            norm_constrained_estimate(&Vec3::new(3.0, 4.0, 0.0)).unwrap(),
            Vec3::new(0.6, 0.8, 0.0)
        );
        let e = norm_constrained_estimate(&Vec3::new(1e-3, -5.0, 2.0)).unwrap();
        assert!((e.norm() - 1.0).abs() < 1e-12);
        assert!(matches!(
            norm_constrained_estimate(&Vec3::zeros()),
            Err(Error::DegenerateMean { .. })
        ));
    }

    fn scenario(seed: u64, duration: f64, gamma2: f64, alpha2: f64) -> Scenario {
        let mut cfg = ScenarioConfig {
            duration_s: duration,
            gamma2,
            ..Default::default()
        };
        cfg.model.alpha2 = alpha2;
        simulate_scenario(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn static_problem_fixed_point() {
        let mut s = scenario(1, 0.3, 0.0, 1e-2).without_measurements();
        s.gyro.iter_mut().for_each(|g| *g = Vec3::zeros());
        let model = MeasurementModel::new(9.82, 1e-2).unwrap();
        let f = run_gaussian_filter(&s, 0.0, &model, GaussianBelief::uniform_sphere()).unwrap();
        assert!(f
            .beliefs
            .iter()
            .all(|b| *b == GaussianBelief::uniform_sphere()));
    }

    #[test]
    fn filter_converges_to_truth() {
        let s = scenario(2, 1.0, 1e-3, 1e-3);
        let model = MeasurementModel::new(9.82, 1e-3).unwrap();
        let f = run_gaussian_filter(&s, 1e-3, &model, GaussianBelief::uniform_sphere()).unwrap();
        let est = norm_constrained_estimate(&f.beliefs.last().unwrap().mean).unwrap();
        assert!(angular_error_deg(&est, s.truth.last().unwrap()).unwrap() < 5.0);
        let again =
            run_gaussian_filter(&s, 1e-3, &model, GaussianBelief::uniform_sphere()).unwrap();
        assert_eq!(f, again);
    }

    #[test]
    fn smoother_without_measurements_matches_filter() {
        let s = scenario(3, 0.5, 1e-2, 1e-2).without_measurements();
        let model = MeasurementModel::new(9.82, 1e-2).unwrap();
        let b0 = GaussianBelief {
            mean: Vec3::new(0.2, -0.4, 0.8),
            cov: diag(0.01, 0.02, 0.03),
        };
        let f = run_gaussian_filter(&s, 1e-2, &model, b0).unwrap();
        let sm = run_gaussian_smoother(&f, &s, 1e-2).unwrap();
        assert_eq!(sm.beliefs.last(), f.beliefs.last());
        for (a, b) in sm.beliefs.iter().zip(&f.beliefs) {
            assert!((a.mean - b.mean).norm() < 1e-8);
            assert!((a.cov - b.cov).abs().max() < 1e-8);
        }
    }

    #[test]
    fn smoother_does_not_inflate_covariance() {
        let s = scenario(4, 1.0, 1e-2, 1e-2);
        let model = MeasurementModel::new(9.82, 1e-2).unwrap();
        let f = run_gaussian_filter(&s, 1e-2, &model, GaussianBelief::uniform_sphere()).unwrap();
        let sm = run_gaussian_smoother(&f, &s, 1e-2).unwrap();
        for (a, b) in sm.beliefs.iter().zip(&f.beliefs) {
            let diff = b.cov - a.cov + Mat3::identity() * 1e-9;
            let min_eig = diff.symmetric_eigenvalues().min();
            assert!(min_eig >= 0.0, "P_s not below P_f: {min_eig}");
            assert!((a.cov - a.cov.transpose()).abs().max() < 1e-12);
            assert!(a.cov.symmetric_eigenvalues().min() > -1e-9);
        }
    }
}

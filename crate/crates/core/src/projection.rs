//! Projection filter and smoother for exponential families.
//!
//! For a family `p_θ ∝ exp(θᵀ s(x) − ψ(θ))` and an Itô diffusion with generator
//! `𝒢` and diffusion matrix `Q`, projecting the density dynamics onto the family
//! (in the Hellinger metric) gives parameter ODEs
//!
//! ```text
//! prediction: θ̇_F = g⁻¹(θ_F) E_{θ_F}[𝒢 s]
//! smoothing:  θ̇_S = g⁻¹(θ_S) ( E_{θ_S}[𝒢 s] + E_{θ_S}[J_s Q J_sᵀ] (θ_S − θ_F) )
//! ```
//!
//! where `g` is the Fisher information and `J_s` the Jacobian of `s`. The smoother
//! runs backward in time from `θ_S(T) = θ_F(T)`.
//!
//! [`ExpFamilyModel`] packages the expectations these ODEs need, and
//! [`predict_rhs_generic`] / [`smooth_rhs_generic`] evaluate them. For the von
//! Mises-Fisher family on S² both reduce to the closed forms [`vmf_predict_rhs`]
//! and [`vmf_smooth_rhs`], which the drivers integrate.

use std::path::Path;

use nalgebra::{SMatrix, SVector};

use crate::dynamics::Scenario;
use crate::error::{Error, Result};
use crate::ode::rk4_step;
use crate::sphere_math::{projectors, Mat3, Vec3};
use crate::vmf::{self, MeasurementModel, NaturalParam};

/// The expectations under `p_θ` that define a projection estimator for one
/// exponential family and one diffusion.
pub trait ExpFamilyModel<const D: usize> {
    /// `E_θ[𝒢 s]`.
    fn expected_generator_statistic(&self, theta: &SVector<f64, D>) -> SVector<f64, D>;

    /// Fisher information `g(θ)`.
    fn fisher(&self, theta: &SVector<f64, D>) -> SMatrix<f64, D, D>;

    /// `g⁻¹(θ)`. Defaults to a Cholesky inverse of [`ExpFamilyModel::fisher`].
    fn fisher_inv(&self, theta: &SVector<f64, D>) -> SMatrix<f64, D, D> {
        self.fisher(theta)
            .cholesky()
            .map(|c| c.inverse())
            .unwrap_or_else(|| SMatrix::from_element(f64::NAN))
    }

    /// `E_θ[J_s Q J_sᵀ]`.
    fn expected_process_noise(&self, theta: &SVector<f64, D>) -> SMatrix<f64, D, D>;
}

/// Von Mises-Fisher densities on S² under the sphere diffusion
/// `dX = −Ω̆ × X dt − γ² X dt + γ X × dW`, with the current gyro reading as context.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VmfSphereModel {
    pub omega: Vec3,
    pub gamma2: f64,
}

impl ExpFamilyModel<3> for VmfSphereModel {
    fn expected_generator_statistic(&self, theta: &Vec3) -> Vec3 {
        vmf::expected_generator_statistic(&NaturalParam(*theta), &self.omega, self.gamma2)
    }

    fn fisher(&self, theta: &Vec3) -> Mat3 {
        vmf::fisher(&NaturalParam(*theta))
    }

    fn fisher_inv(&self, theta: &Vec3) -> Mat3 {
        vmf::fisher_inv(&NaturalParam(*theta))
    }

    // s(x) = x, so J_s = I.
    fn expected_process_noise(&self, theta: &Vec3) -> Mat3 {
        vmf::expected_process_noise(&NaturalParam(*theta), self.gamma2)
    }
}

pub fn predict_rhs_generic<M: ExpFamilyModel<D>, const D: usize>(
    model: &M,
    theta: &SVector<f64, D>,
) -> SVector<f64, D> {
    model.fisher_inv(theta) * model.expected_generator_statistic(theta)
}

pub fn smooth_rhs_generic<M: ExpFamilyModel<D>, const D: usize>(
    model: &M,
    theta_s: &SVector<f64, D>,
    theta_f: &SVector<f64, D>,
) -> SVector<f64, D> {
    let drift = model.expected_generator_statistic(theta_s);
    let pull = model.expected_process_noise(theta_s) * (theta_s - theta_f);
    model.fisher_inv(theta_s) * (drift + pull)
}

/// `κ'(r) / (r κ''(r))`, with its limit 1 at the origin.
fn shrink_ratio(r: f64) -> f64 {
    if r == 0.0 {
        return 1.0;
    }
    let k = NaturalParam(Vec3::new(r, 0.0, 0.0)).kappa();
    k.kappa_prime / (r * k.kappa_double_prime)
}

/// Closed-form VMF prediction: `θ̇ = −Ω̆ × θ − γ² κ'(‖θ‖)/(‖θ‖κ''(‖θ‖)) θ`.
pub fn vmf_predict_rhs(theta: &NaturalParam, omega: &Vec3, gamma2: f64) -> Vec3 {
    let t = theta.vector();
    -omega.cross(t) - t * (gamma2 * shrink_ratio(t.norm()))
}

/// Smoother gain `G(θ) = γ²‖θ‖/κ' P_⊥ + γ²(1 − κ'²)/κ'' P − γ² I`, which equals
/// `g⁻¹(θ) E_θ[Q]`. At θ = 0 it is `2γ² I`.
pub fn smoother_gain(theta: &NaturalParam, gamma2: f64) -> Mat3 {
    let r = theta.concentration();
    if r == 0.0 {
        return Mat3::identity() * (2.0 * gamma2);
    }
    let Ok((p, p_perp)) = projectors(theta.vector()) else {
        return Mat3::from_element(f64::NAN);
    };
    let k = theta.kappa();
    let perp = r / k.kappa_prime;
    let along = (1.0 - k.kappa_prime * k.kappa_prime) / k.kappa_double_prime;
    (p_perp * perp + p * along - Mat3::identity()) * gamma2
}

/// Closed-form VMF smoother: prediction field plus `G(θ_S)(θ_S − θ_F)`.
pub fn vmf_smooth_rhs(
    theta_s: &NaturalParam,
    theta_f: &NaturalParam,
    omega: &Vec3,
    gamma2: f64,
) -> Vec3 {
    vmf_predict_rhs(theta_s, omega, gamma2)
        + smoother_gain(theta_s, gamma2) * (theta_s.0 - theta_f.0)
}

/// Largest `h·λ` taken in one RK4 step, with `λ = 2γ²·max(‖θ‖, 1)` bounding the
/// stiffest rate of the concentration dynamics (κ'/κ'' ≈ ‖θ‖² for large ‖θ‖).
const MAX_STEP_STIFFNESS: f64 = 0.5;
const MAX_SUBSTEPS: usize = 4096;

/// Number of equal RK4 substeps for one grid interval. Conjugate updates with
/// small α² push ‖θ‖ past 10⁵, where a single step per grid interval is unstable.
fn stiff_substeps(h: f64, gamma2: f64, concentration: f64) -> usize {
    let rate = 2.0 * gamma2 * concentration.max(1.0);
    let n = (h * rate / MAX_STEP_STIFFNESS).ceil();
    if n.is_finite() && n >= 1.0 {
        (n as usize).min(MAX_SUBSTEPS)
    } else {
        1
    }
}

/// Forward pass of the VMF projection filter on a scenario grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterTrajectory {
    pub times: Vec<f64>,
    /// Filter parameter at each grid point, after any update there.
    pub theta_f: Vec<NaturalParam>,
    /// Filter parameter at each grid point before any update there. Equal to
    /// `theta_f` where no measurement arrived.
    pub theta_pred: Vec<NaturalParam>,
    pub update_flags: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmootherTrajectory {
    pub times: Vec<f64>,
    pub theta_s: Vec<NaturalParam>,
}

fn check_grid(scenario: &Scenario) -> Result<()> {
    if scenario.is_empty() {
        return Err(Error::EmptyInput("scenario has no grid points"));
    }
    if scenario.gyro.len() != scenario.len() {
        return Err(Error::Domain(
            "gyro samples do not match the time grid".into(),
        ));
    }
    if scenario.times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain(
            "time grid must be strictly increasing".into(),
        ));
    }
    if scenario
        .measurements
        .iter()
        .any(|m| m.index >= scenario.len())
    {
        return Err(Error::Domain(
            "measurement index outside the time grid".into(),
        ));
    }
    Ok(())
}

fn ensure_finite(theta: &NaturalParam, t: f64) -> Result<()> {
    if theta.is_finite() {
        Ok(())
    } else {
        Err(Error::NumericalBlowup {
            t,
            detail: format!("non-finite natural parameter {:?}", theta.0.as_slice()),
        })
    }
}

/// Runs the projection filter: RK4 prediction on the fine grid with the gyro
/// sample of each interval, conjugate update at each measurement. Intervals are
/// split into equal substeps when the concentration makes the ODE stiff.
pub fn run_vmf_filter(
    scenario: &Scenario,
    gamma2: f64,
    model: &MeasurementModel,
    theta0: NaturalParam,
) -> Result<FilterTrajectory> {
    check_grid(scenario)?;
    let n = scenario.len();
    let slots = scenario.measurement_slots();
    let mut theta_f = Vec::with_capacity(n);
    let mut theta_pred = Vec::with_capacity(n);
    let mut update_flags = Vec::with_capacity(n);

    let mut theta = theta0;
    for i in 0..n {
        if i > 0 {
            let (t0, t1) = (scenario.times[i - 1], scenario.times[i]);
            let omega = scenario.gyro[i - 1];
            let sub = stiff_substeps(t1 - t0, gamma2, theta.concentration());
            let h = (t1 - t0) / sub as f64;
            let mut y = theta.0;
            for k in 0..sub {
                y = rk4_step(
                    |_, y| vmf_predict_rhs(&NaturalParam(*y), &omega, gamma2),
                    t0 + k as f64 * h,
                    &y,
                    h,
                )?;
            }
            theta = NaturalParam(y);
        }
        theta_pred.push(theta);
        if let Some(y) = slots[i] {
            theta = vmf::bayes_update(&theta, &y, model);
        }
        ensure_finite(&theta, scenario.times[i])?;
        theta_f.push(theta);
        update_flags.push(slots[i].is_some());
    }

    Ok(FilterTrajectory {
        times: scenario.times.clone(),
        theta_f,
        theta_pred,
        update_flags,
    })
}

/// Cubic Hermite interpolant on an interval of length `h` at fraction `w ∈ [0, 1]`.
pub(crate) fn hermite<const N: usize>(
    y0: &SVector<f64, N>,
    d0: &SVector<f64, N>,
    y1: &SVector<f64, N>,
    d1: &SVector<f64, N>,
    h: f64,
    w: f64,
) -> SVector<f64, N> {
    let w2 = w * w;
    let w3 = w2 * w;
    y0 * (2.0 * w3 - 3.0 * w2 + 1.0)
        + d0 * ((w3 - 2.0 * w2 + w) * h)
        + y1 * (-2.0 * w3 + 3.0 * w2)
        + d1 * ((w3 - w2) * h)
}

/// Backward pass of the projection smoother.
///
/// Starts from `θ_S(T) = θ_F(T)` and integrates the smoothing ODE backward with
/// RK4. Within each grid interval `θ_F` is the cubic Hermite interpolant between
/// the post-update value at the left end and the pre-update value at the right
/// end, with slopes from the prediction ODE; θ_F is discontinuous at updates.
pub fn run_vmf_smoother(
    filter: &FilterTrajectory,
    scenario: &Scenario,
    gamma2: f64,
) -> Result<SmootherTrajectory> {
    check_grid(scenario)?;
    let n = filter.times.len();
    if n != scenario.len() {
        return Err(Error::Domain(format!(
            "filter has {n} points but the scenario grid has {}",
            scenario.len()
        )));
    }
    let mut theta_s = vec![NaturalParam::UNIFORM; n];
    let mut current = filter.theta_f[n - 1];
    theta_s[n - 1] = current;

    for i in (0..n - 1).rev() {
        let (t0, t1) = (filter.times[i], filter.times[i + 1]);
        let h = t1 - t0;
        let left = filter.theta_f[i].0;
        let right = filter.theta_pred[i + 1].0;
        let omega = scenario.gyro[i];
        // Reversed time u = −t, so the step runs from u = −t1 to u = −t0.
        let left_slope = vmf_predict_rhs(&NaturalParam(left), &omega, gamma2);
        let right_slope = vmf_predict_rhs(&NaturalParam(right), &omega, gamma2);
        let rhs = |u: f64, y: &Vec3| {
            let w = (-u - t0) / h;
            let theta_f = NaturalParam(hermite(&left, &left_slope, &right, &right_slope, h, w));
            -vmf_smooth_rhs(&NaturalParam(*y), &theta_f, &omega, gamma2)
        };
        let beta = current.concentration().max(left.norm()).max(right.norm());
        let sub = stiff_substeps(h, gamma2, beta);
        let hs = h / sub as f64;
        let mut y = current.0;
        for k in 0..sub {
            y = rk4_step(rhs, -t1 + k as f64 * hs, &y, hs).map_err(|e| match e {
                Error::NumericalBlowup { t, detail } => Error::NumericalBlowup { t: -t, detail },
                e => e,
            })?;
        }
        current = NaturalParam(y);
        ensure_finite(&current, t0)?;
        theta_s[i] = current;
    }

    Ok(SmootherTrajectory {
        times: filter.times.clone(),
        theta_s,
    })
}

/// Integrates the VMF prediction ODE alone from `t0` to `t1` in `steps` RK4 steps.
pub fn integrate_vmf_prediction(
    theta0: NaturalParam,
    omega: impl Fn(f64) -> Vec3,
    gamma2: f64,
    t0: f64,
    t1: f64,
    steps: usize,
) -> Result<NaturalParam> {
    let h = (t1 - t0) / steps as f64;
    let mut y = theta0.0;
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        y = rk4_step(
            |t, y| vmf_predict_rhs(&NaturalParam(*y), &omega(t), gamma2),
            t,
            &y,
            h,
        )?;
    }
    Ok(NaturalParam(y))
}

/// Writes `t, param_x, param_y, param_z, est_x, est_y, est_z`. The estimate
/// columns are empty where no point estimate exists.
pub fn write_trajectory_csv(
    path: &Path,
    times: &[f64],
    params: &[Vec3],
    estimates: &[Option<Vec3>],
) -> Result<()> {
    if times.len() != params.len() || times.len() != estimates.len() {
        return Err(Error::Domain(
            "trajectory columns have different lengths".into(),
        ));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record([
        "t", "param_x", "param_y", "param_z", "est_x", "est_y", "est_z",
    ])
    .map_err(|e| Error::csv(path, e))?;
    for ((t, p), e) in times.iter().zip(params).zip(estimates) {
        let est: [String; 3] = match e {
            Some(v) => [v.x.to_string(), v.y.to_string(), v.z.to_string()],
            None => Default::default(),
        };
        w.write_record([
            t.to_string(),
            p.x.to_string(),
            p.y.to_string(),
            p.z.to_string(),
            est[0].clone(),
            est[1].clone(),
            est[2].clone(),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

impl FilterTrajectory {
    /// Mode of the filter density at each grid point (`None` at θ = 0).
    pub fn modes(&self) -> Vec<Option<Vec3>> {
        self.theta_f.iter().map(|t| t.mode().ok()).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let params: Vec<Vec3> = self.theta_f.iter().map(|t| t.0).collect();
        write_trajectory_csv(path, &self.times, &params, &self.modes())
    }
}

impl SmootherTrajectory {
    pub fn modes(&self) -> Vec<Option<Vec3>> {
        self.theta_s.iter().map(|t| t.mode().ok()).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let params: Vec<Vec3> = self.theta_s.iter().map(|t| t.0).collect();
        write_trajectory_csv(path, &self.times, &params, &self.modes())
    }
}

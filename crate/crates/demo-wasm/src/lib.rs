//! Browser demo for `sphere-projection`.
//!
//! The plain functions here do the work and are testable natively; the
//! [`bindings`] module wraps them for JavaScript. Vectors cross the boundary as
//! flat `Float64Array`s with three entries per point.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sphere_projection::dynamics::simulate_scenario;
use sphere_projection::experiment::{mean_angular_error, Estimator, ExperimentConfig};
use sphere_projection::gaussian::{run_gaussian_filter, run_gaussian_smoother, GaussianBelief};
use sphere_projection::projection::{run_vmf_filter, run_vmf_smoother};
use sphere_projection::sphere_math::{angular_error_deg, kappa_all};
use sphere_projection::vmf::{expected_statistic, sample_vmf};
use sphere_projection::{Error, NaturalParam, Result, Vec3};

pub mod bindings;

/// Longest trajectory the demo simulates, in seconds.
pub const MAX_DURATION_S: f64 = 30.0;
/// Most points drawn by [`vmf_samples`] in one call.
pub const MAX_SAMPLES: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct KappaCurves {
    pub r: Vec<f64>,
    pub kappa_prime: Vec<f64>,
    pub kappa_double_prime: Vec<f64>,
}

/// κ'(r) and κ''(r) on `points` evenly spaced values in `[0, r_max]`.
pub fn kappa_curves(r_max: f64, points: usize) -> Result<KappaCurves> {
    if !(r_max > 0.0 && r_max.is_finite()) || points < 2 {
        return Err(Error::Domain(format!(
            "need r_max > 0 and at least 2 points, got r_max = {r_max}, points = {points}"
        )));
    }
    let mut curves = KappaCurves {
        r: Vec::with_capacity(points),
        kappa_prime: Vec::with_capacity(points),
        kappa_double_prime: Vec::with_capacity(points),
    };
    for i in 0..points {
        let r = r_max * i as f64 / (points - 1) as f64;
        let k = kappa_all(r)?;
        curves.r.push(r);
        curves.kappa_prime.push(k.kappa_prime);
        curves.kappa_double_prime.push(k.kappa_double_prime);
    }
    Ok(curves)
}

/// One simulated trajectory with the per-point angular error of every estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracking {
    pub times: Vec<f64>,
    /// Flattened truth directions.
    pub truth: Vec<f64>,
    /// Angular error in degrees per grid point, in [`Estimator::ALL`] order.
    /// NaN where an estimator has no point estimate yet.
    pub errors: [Vec<f64>; 4],
    /// Mean error after the first measurement, in [`Estimator::ALL`] order.
    pub mean_errors: [f64; 4],
}

/// Simulates one scenario with the default study settings and runs all four estimators.
pub fn track(alpha2: f64, s: f64, duration_s: f64, seed: u64) -> Result<Tracking> {
    if !(duration_s > 0.0 && duration_s <= MAX_DURATION_S) {
        return Err(Error::Config(format!(
            "duration must be in (0, {MAX_DURATION_S}] s, got {duration_s}"
        )));
    }
    let base = ExperimentConfig {
        duration_s,
        ..ExperimentConfig::default()
    };
    let cfg = base.scenario_config(alpha2, s, seed);
    let scenario = simulate_scenario(&cfg, &mut ChaCha8Rng::seed_from_u64(seed))?;
    let from = scenario.first_measurement_index().ok_or(Error::EmptyInput(
        "trajectory is shorter than one measurement period",
    ))?;

    let vf = run_vmf_filter(&scenario, s, &cfg.model, NaturalParam::UNIFORM)?;
    let vs = run_vmf_smoother(&vf, &scenario, s)?;
    let gf = run_gaussian_filter(&scenario, s, &cfg.model, GaussianBelief::uniform_sphere())?;
    let gs = run_gaussian_smoother(&gf, &scenario, s)?;
    let estimates = [vf.modes(), vs.modes(), gf.estimates(), gs.estimates()];

    let mut errors: [Vec<f64>; 4] = Default::default();
    let mut mean_errors = [0.0; 4];
    for (k, est) in estimates.iter().enumerate() {
        errors[k] = est
            .iter()
            .zip(&scenario.truth)
            .map(|(e, x)| match e {
                Some(e) => angular_error_deg(e, x),
                None => Ok(f64::NAN),
            })
            .collect::<Result<_>>()?;
        mean_errors[k] = mean_angular_error(&scenario.truth, est, from)?;
    }
    debug_assert_eq!(Estimator::ALL.len(), errors.len());

    Ok(Tracking {
        times: scenario.times.clone(),
        truth: flatten(&scenario.truth),
        errors,
        mean_errors,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    /// Flattened unit vectors.
    pub points: Vec<f64>,
    pub expected_mean: [f64; 3],
}

/// `count` draws from the VMF density with natural parameter `theta`.
pub fn vmf_samples(theta: [f64; 3], count: usize, seed: u64) -> Result<Samples> {
    let theta = NaturalParam::new(theta[0], theta[1], theta[2]);
    if !theta.is_finite() {
        return Err(Error::Domain("natural parameter must be finite".into()));
    }
    if count > MAX_SAMPLES {
        return Err(Error::Domain(format!(
            "at most {MAX_SAMPLES} samples, got {count}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<Vec3> = (0..count).map(|_| sample_vmf(&theta, &mut rng)).collect();
    let mean = expected_statistic(&theta);
    Ok(Samples {
        points: flatten(&draws),
        expected_mean: [mean.x, mean.y, mean.z],
    })
}

fn flatten(vs: &[Vec3]) -> Vec<f64> {
    vs.iter().flat_map(|v| [v.x, v.y, v.z]).collect()
}

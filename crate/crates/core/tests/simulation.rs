//! Statistical and long-run checks of the simulator and the VMF sampler.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sphere_projection::dynamics::{ou_step, sde_step, simulate_scenario, OuParams, ScenarioConfig};
use sphere_projection::ode::rk4_step;
use sphere_projection::sphere_math::angular_error_deg;
use sphere_projection::vmf::{expected_statistic, fisher, sample_vmf};
use sphere_projection::{MeasurementModel, NaturalParam, Vec3};

#[test]
fn rotation_increments_preserve_the_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ou = OuParams::default();
    let mut x = Vec3::new(0.0, 0.6, 0.8);
    let mut omega = Vec3::new(0.5, -1.0, 2.0);
    for k in 0..1_000_000 {
        if k % 10 == 0 {
            omega = ou_step(&omega, 0.01, &ou, &mut rng);
        }
        x = sde_step(&x, &omega, 0.3, 1e-3, &mut rng).unwrap();
    }
    assert!((x.norm() - 1.0).abs() <= 1e-9, "norm {}", x.norm());
}

/// Largest angle between the simulated truth and a fine RK4 solution of
/// `ẋ = −Ω̆ × x` with the same held gyro samples.
fn deterministic_deviation(substeps: usize) -> f64 {
    let cfg = ScenarioConfig {
        duration_s: 2.0,
        substeps_per_meas: substeps,
        gamma2: 0.0,
        model: MeasurementModel::new(9.82, 1e-2).unwrap(),
        ..ScenarioConfig::default()
    };
    let scenario = simulate_scenario(&cfg, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    let mut x = scenario.truth[0];
    let mut worst: f64 = 0.0;
    for i in 1..scenario.len() {
        let (t0, t1) = (scenario.times[i - 1], scenario.times[i]);
        let omega = scenario.gyro[i - 1];
        let fine = 50;
        let h = (t1 - t0) / fine as f64;
        for k in 0..fine {
            x = rk4_step(|_, x| -omega.cross(x), t0 + k as f64 * h, &x, h).unwrap();
        }
        worst = worst.max(
            angular_error_deg(&x.normalize(), &scenario.truth[i])
                .unwrap()
                .to_radians(),
        );
    }
    worst
}

#[test]
fn noiseless_truth_follows_the_gyro_ode() {
    // Rotation increments integrate a held gyro sample exactly, so the
    // deviation is far inside the O(dt²) bound on both grids.
    for substeps in [5, 10] {
        let dt = 0.01 / substeps as f64;
        let deviation = deterministic_deviation(substeps);
        assert!(deviation <= dt * dt, "dt {dt}: deviation {deviation} rad");
    }
}

#[test]
fn ou_stationary_variance() {
    let ou = OuParams::default();
    let target = ou.stationary_variance();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut omega = Vec3::zeros();
    let (mut sum, mut count) = (0.0, 0usize);
    for k in 0..400_000 {
        omega = ou_step(&omega, 0.01, &ou, &mut rng);
        if k >= 1000 {
            sum += omega.norm_squared();
            count += 3;
        }
    }
    let var = sum / count as f64;
    assert!((var - target).abs() <= 0.02 * target, "{var} vs {target}");
}

/// Checks sample mean and covariance of 10⁶ draws against `E_θ[X]` and `g(θ)`
/// within three standard errors, entry by entry.
fn check_sampler_moments(theta: NaturalParam, seed: u64) {
    let n = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<Vec3> = (0..n).map(|_| sample_vmf(&theta, &mut rng)).collect();
    let nf = n as f64;

    let mean = expected_statistic(&theta);
    let cov = fisher(&theta);
    let sample_mean = draws.iter().sum::<Vec3>() / nf;
    for i in 0..3 {
        let se = (cov[(i, i)] / nf).sqrt();
        assert!(
            (sample_mean[i] - mean[i]).abs() <= 3.0 * se,
            "θ {theta:?}: mean[{i}] {} vs {}",
            sample_mean[i],
            mean[i]
        );
    }
    for i in 0..3 {
        for j in i..3 {
            let products: Vec<f64> = draws
                .iter()
                .map(|x| (x[i] - mean[i]) * (x[j] - mean[j]))
                .collect();
            let m = products.iter().sum::<f64>() / nf;
            let var = products.iter().map(|p| (p - m) * (p - m)).sum::<f64>() / (nf - 1.0);
            let se = (var / nf).sqrt();
            assert!(
                (m - cov[(i, j)]).abs() <= 3.0 * se,
                "θ {theta:?}: cov[{i},{j}] {m} vs {}",
                cov[(i, j)]
            );
        }
    }
}

#[test]
fn vmf_sampler_moments_match_fisher_information() {
    check_sampler_moments(NaturalParam::new(0.0, 0.0, 0.0), 4);
    check_sampler_moments(NaturalParam::new(0.8, -0.4, 1.1), 5);
    check_sampler_moments(NaturalParam::new(-6.0, 3.0, 2.0), 6);
}

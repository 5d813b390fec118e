//! Special functions and geometric primitives on the unit sphere S² ⊂ ℝ³.
//!
//! The central object is the log-normaliser of the von Mises-Fisher family on S²,
//!
//! ```text
//! κ(r)   = −log r + log 4π + log sinh r
//! κ'(r)  = coth r − 1/r
//! κ''(r) = 1/r² − 1/sinh² r
//! ```
//!
//! Both derivatives suffer catastrophic cancellation near the origin and `sinh`
//! overflows for large arguments, so [`kappa_all`] switches between three branches.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Below this argument κ' and κ'' come from their Taylor polynomials.
const TAYLOR_BRANCH: f64 = 1e-4;
/// Below this argument κ' and κ'' come from positive-term power series ratios.
const SERIES_BRANCH: f64 = 1.0;
/// Above this argument `sinh` is never evaluated directly.
const ASYMPTOTIC_BRANCH: f64 = 20.0;

/// Tolerance on `‖u‖ = 1` accepted by [`angular_error_deg`] and the simulator.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// κ and its first two derivatives evaluated at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaValues {
    pub kappa: f64,
    pub kappa_prime: f64,
    pub kappa_double_prime: f64,
}

/// Evaluates κ(r), κ'(r) and κ''(r) for `r ≥ 0`.
///
/// Continuous at the origin (κ(0) = log 4π, κ'(0) = 0, κ''(0) = 1/3) and free of
/// overflow for arguments well beyond 10⁶.
pub fn kappa_all(r: f64) -> Result<KappaValues> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::Domain(format!(
            "kappa_all needs a finite r >= 0, got {r}"
        )));
    }
    let log_4pi = (4.0 * std::f64::consts::PI).ln();

    if r < TAYLOR_BRANCH {
        let r2 = r * r;
        // log(sinh r / r) = r²/6 − r⁴/180 + …
        let kappa = log_4pi + r2 / 6.0 - r2 * r2 / 180.0;
        let kappa_prime = r / 3.0 - r * r2 / 45.0 + 2.0 * r * r2 * r2 / 945.0;
        let kappa_double_prime = 1.0 / 3.0 - r2 / 15.0 + 2.0 * r2 * r2 / 189.0;
        return Ok(KappaValues {
            kappa,
            kappa_prime,
            kappa_double_prime,
        });
    }

    if r < SERIES_BRANCH {
        // sinh r − r and r cosh r − sinh r as positive-term series, no cancellation.
        let r2 = r * r;
        let mut term = r * r2 / 6.0; // r^(2k+1)/(2k+1)! at k = 1
        let mut sinh_minus_r = 0.0;
        let mut rcosh_minus_sinh = 0.0;
        let mut k = 1.0_f64;
        while term > f64::EPSILON * 1e-3 * sinh_minus_r || k < 2.0 {
            sinh_minus_r += term;
            rcosh_minus_sinh += 2.0 * k * term;
            k += 1.0;
            term *= r2 / ((2.0 * k) * (2.0 * k + 1.0));
        }
        let sinh = r + sinh_minus_r;
        let kappa = log_4pi + (sinh_minus_r / r).ln_1p();
        let kappa_prime = rcosh_minus_sinh / (r * sinh);
        let kappa_double_prime = sinh_minus_r * (sinh + r) / (r2 * sinh * sinh);
        return Ok(KappaValues {
            kappa,
            kappa_prime,
            kappa_double_prime,
        });
    }

    // e = exp(−2r); coth r = 1 + 2e/(1−e), csch² r = 4e/(1−e)², log sinh r = r − log 2 + log(1−e).
    let e = (-2.0 * r).exp();
    let one_minus_e = -(-2.0 * r).exp_m1();
    let log_sinh = r - std::f64::consts::LN_2 + (-e).ln_1p();
    let kappa = -r.ln() + log_4pi + log_sinh;
    let (coth, csch2) = if r > ASYMPTOTIC_BRANCH {
        (
            1.0 + 2.0 * e / one_minus_e,
            4.0 * e / (one_minus_e * one_minus_e),
        )
    } else {
        let s = r.sinh();
        (1.0 / r.tanh(), 1.0 / (s * s))
    };
    Ok(KappaValues {
        kappa,
        kappa_prime: coth - 1.0 / r,
        kappa_double_prime: 1.0 / (r * r) - csch2,
    })
}

/// Standard cross product `u × v`.
#[inline]
pub fn cross(u: &Vec3, v: &Vec3) -> Vec3 {
    u.cross(v)
}

/// The skew matrix `[v]_×` with `[v]_× w = v × w`.
#[inline]
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Returns `(P, P_⊥)`: the orthogonal projectors onto span{θ} and its complement.
pub fn projectors(theta: &Vec3) -> Result<(Mat3, Mat3)> {
    let r = theta.norm();
    if r == 0.0 {
        return Err(Error::DegenerateParameter);
    }
    if !r.is_finite() {
        return Err(Error::Domain(format!(
            "projectors needs a finite θ, got {theta:?}"
        )));
    }
    // u uᵀ rather than θθᵀ/‖θ‖², which underflows for tiny θ.
    let u = theta / r;
    let p = u * u.transpose();
    Ok((p, Mat3::identity() - p))
}

/// Great-circle angle between two unit vectors, in degrees.
pub fn angular_error_deg(u: &Vec3, v: &Vec3) -> Result<f64> {
    for w in [u, v] {
        if (w.norm() - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::Domain(format!(
                "angular_error_deg needs unit vectors, got norm {}",
                w.norm()
            )));
        }
    }
    Ok(u.dot(v).clamp(-1.0, 1.0).acos().to_degrees())
}

/// Applies the rotation `exp([v]_×)` to `x` (Rodrigues' formula).
pub fn rotate_exp(v: &Vec3, x: &Vec3) -> Vec3 {
    let angle = v.norm();
    let vx = v.cross(x);
    let vvx = v.cross(&vx);
    let (a, b) = if angle < 1e-8 {
        let a2 = angle * angle;
        (1.0 - a2 / 6.0, 0.5 - a2 / 24.0)
    } else {
        let (s, c) = angle.sin_cos();
        (s / angle, (1.0 - c) / (angle * angle))
    };
    x + vx * a + vvx * b
}

/// A uniformly distributed point on S² (normalised standard normal triple).
pub fn sample_uniform_sphere<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        let n = v.norm();
        if n > 1e-150 {
            return v / n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // High-precision reference values (30-digit evaluation of coth, csch, log sinh).
    const KAPPA_1: f64 = 2.692_463_608_540_486;
    const KAPPA_PRIME_1: f64 = 0.313_035_285_499_331_3;
    const KAPPA_DPRIME_1: f64 = 0.275_938_339_033_689_5;

    fn reference(r: f64) -> (f64, f64, f64) {
        // Direct formulas, only trusted away from both ends.
        let s = r.sinh();
        (
            -r.ln() + (4.0 * std::f64::consts::PI).ln() + s.ln(),
            1.0 / r.tanh() - 1.0 / r,
            1.0 / (r * r) - 1.0 / (s * s),
        )
    }

    #[test]
    fn kappa_at_zero_is_series_limit() {
        let k = kappa_all(0.0).unwrap();
        assert_relative_eq!(k.kappa, 2.531_024_246_969_290_8, epsilon = 1e-15);
        assert_eq!(k.kappa_prime, 0.0);
        assert_relative_eq!(k.kappa_double_prime, 1.0 / 3.0, epsilon = 1e-16);
    }

    #[test]
    fn kappa_at_one() {
        let k = kappa_all(1.0).unwrap();
        assert_relative_eq!(k.kappa, KAPPA_1, epsilon = 1e-14);
        assert_relative_eq!(k.kappa_prime, KAPPA_PRIME_1, epsilon = 1e-14);
        assert_relative_eq!(k.kappa_double_prime, KAPPA_DPRIME_1, epsilon = 1e-14);
        // Just below the switch to the exponential form.
        let k = kappa_all(0.5).unwrap();
        assert_relative_eq!(k.kappa, 2.572_349_101_582_209, epsilon = 1e-14);
        assert_relative_eq!(k.kappa_prime, 0.163_953_413_738_652_85, epsilon = 1e-15);
        assert_relative_eq!(
            k.kappa_double_prime,
            0.317_305_623_168_830_7,
            epsilon = 1e-15
        );
    }

    #[test]
    fn kappa_large_arguments() {
        let k = kappa_all(50.0).unwrap();
        assert_relative_eq!(k.kappa_prime, 0.98, epsilon = 1e-15);
        assert_relative_eq!(k.kappa_double_prime, 4.0e-4, epsilon = 1e-15);
        assert_relative_eq!(k.kappa, 47.925_854_060_981_2, epsilon = 1e-12);
        let k = kappa_all(20.0).unwrap();
        assert_relative_eq!(k.kappa_prime, 0.95, epsilon = 1e-15);
        assert_relative_eq!(k.kappa_double_prime, 0.0025, max_relative = 1e-13);
        for r in [1e3, 1e5, 1e6, 1e12] {
            let k = kappa_all(r).unwrap();
            assert!(k.kappa.is_finite());
            assert_relative_eq!(k.kappa_prime, 1.0 - 1.0 / r, max_relative = 1e-15);
            assert_relative_eq!(k.kappa_double_prime, 1.0 / (r * r), max_relative = 1e-15);
        }
    }

    #[test]
    fn kappa_small_branch_matches_series() {
        let r = 1e-6;
        let k = kappa_all(r).unwrap();
        assert!((k.kappa_prime - (r / 3.0 - r.powi(3) / 45.0)).abs() < 1e-8);
        assert!((k.kappa_double_prime - (1.0 / 3.0 - r * r / 15.0)).abs() < 1e-8);
        assert_relative_eq!(
            k.kappa_prime,
            3.333_333_333_333_111e-7,
            max_relative = 1e-14
        );
        // ratio κ'/(rκ'') → 1
        assert_relative_eq!(
            k.kappa_prime / (r * k.kappa_double_prime),
            1.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn kappa_branches_agree_at_switch_points() {
        for r in [TAYLOR_BRANCH, SERIES_BRANCH, ASYMPTOTIC_BRANCH] {
            let below = kappa_all(r * (1.0 - 1e-12)).unwrap();
            let above = kappa_all(r).unwrap();
            assert_relative_eq!(below.kappa, above.kappa, max_relative = 1e-11);
            assert_relative_eq!(below.kappa_prime, above.kappa_prime, max_relative = 1e-11);
            assert_relative_eq!(
                below.kappa_double_prime,
                above.kappa_double_prime,
                max_relative = 1e-11
            );
        }
        for r in [1.5, 3.0, 7.0, 15.0] {
            let (k, k1, k2) = reference(r);
            let v = kappa_all(r).unwrap();
            assert_relative_eq!(v.kappa, k, max_relative = 1e-14);
            assert_relative_eq!(v.kappa_prime, k1, max_relative = 1e-14);
            assert_relative_eq!(v.kappa_double_prime, k2, max_relative = 1e-12);
        }
    }

    #[test]
    fn kappa_derivatives_monotone() {
        let mut prev = kappa_all(0.0).unwrap();
        let mut r = 0.01;
        while r < 200.0 {
            let k = kappa_all(r).unwrap();
            assert!(k.kappa_prime > prev.kappa_prime, "κ' not increasing at {r}");
            assert!(
                k.kappa_double_prime < prev.kappa_double_prime,
                "κ'' not decreasing at {r}"
            );
            assert!((0.0..1.0).contains(&k.kappa_prime));
            assert!(k.kappa_double_prime > 0.0 && k.kappa_double_prime <= 1.0 / 3.0);
            prev = k;
            r *= 1.1;
        }
    }

    #[test]
    fn kappa_rejects_bad_input() {
        assert!(matches!(kappa_all(-1.0), Err(Error::Domain(_))));
        assert!(matches!(kappa_all(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(kappa_all(f64::INFINITY), Err(Error::Domain(_))));
    }

    #[test]
    fn cross_products() {
        let x = Vec3::x();
        assert_eq!(cross(&x, &Vec3::y()), Vec3::z());
        assert_eq!(cross(&x, &x), Vec3::zeros());
        assert_eq!(
            cross(&Vec3::new(0.0, 0.0, 2.5), &x),
            Vec3::new(0.0, 2.5, 0.0)
        );
        let v = Vec3::new(0.3, -1.0, 2.0);
        assert_eq!(skew(&v) * x, cross(&v, &x));
    }

    #[test]
    fn projector_examples() {
        let (p, q) = projectors(&Vec3::new(0.0, 0.0, 2.0)).unwrap();
        assert_eq!(p, Mat3::from_diagonal(&Vec3::new(0.0, 0.0, 1.0)));
        assert_eq!(q, Mat3::from_diagonal(&Vec3::new(1.0, 1.0, 0.0)));
        let (p, q) = projectors(&Vec3::new(1.0, 1.0, 0.0)).unwrap();
        let expected = Mat3::new(0.5, 0.5, 0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0);
        assert_relative_eq!(p, expected, epsilon = 1e-15);
        assert_relative_eq!(p + q, Mat3::identity(), epsilon = 1e-15);
        assert!(matches!(
            projectors(&Vec3::zeros()),
            Err(Error::DegenerateParameter)
        ));
    }

    #[test]
    fn angular_error_examples() {
        let u = Vec3::new(0.6, 0.8, 0.0);
        assert_eq!(angular_error_deg(&u, &u).unwrap(), 0.0);
        assert_relative_eq!(angular_error_deg(&u, &-u).unwrap(), 180.0);
        assert_relative_eq!(angular_error_deg(&Vec3::x(), &Vec3::z()).unwrap(), 90.0);
        assert!(angular_error_deg(&Vec3::new(2.0, 0.0, 0.0), &u).is_err());
    }

    #[test]
    fn rotate_exp_examples() {
        let x = Vec3::new(1.0, 0.0, 0.0);
        assert_eq!(rotate_exp(&Vec3::zeros(), &x), x);
        let y = rotate_exp(&Vec3::new(0.0, 0.0, std::f64::consts::FRAC_PI_2), &x);
        assert_relative_eq!(y, Vec3::y(), epsilon = 1e-15);
        // series branch continuity
        let v = Vec3::new(3e-9, -1e-9, 2e-9);
        let w = Vec3::new(0.2, 0.5, -0.3);
        let exact = w + v.cross(&w) + 0.5 * v.cross(&v.cross(&w));
        assert_relative_eq!(rotate_exp(&v, &w), exact, epsilon = 1e-18);
    }

    #[test]
    fn uniform_sphere_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let mut mean = Vec3::zeros();
        let mut second = Mat3::zeros();
        for _ in 0..n {
            let x = sample_uniform_sphere(&mut rng);
            assert!((x.norm() - 1.0).abs() < 1e-12);
            mean += x;
            second += x * x.transpose();
        }
        mean /= n as f64;
        second /= n as f64;
        let bound = 3.0 / (3.0 * n as f64).sqrt();
        for i in 0..3 {
            assert!(mean[i].abs() < bound, "mean[{i}] = {}", mean[i]);
        }
        // Var(X_i²) = 1/5 − 1/9 = 4/45, Var(X_i X_j) = 1/15.
        let se_diag = (4.0 / 45.0 / n as f64).sqrt();
        let se_off = (1.0 / 15.0 / n as f64).sqrt();
        for i in 0..3 {
            for j in 0..3 {
                let (target, se) = if i == j {
                    (1.0 / 3.0, se_diag)
                } else {
                    (0.0, se_off)
                };
                assert!((second[(i, j)] - target).abs() < 4.0 * se);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn vec3(range: f64) -> impl Strategy<Value = Vec3> {
            (-range..range, -range..range, -range..range).prop_map(|(a, b, c)| Vec3::new(a, b, c))
        }

        proptest! {
            #[test]
            fn rotation_is_isometry_and_invertible(v in vec3(10.0), x in vec3(5.0)) {
                let y = rotate_exp(&v, &x);
                prop_assert!((y.norm() - x.norm()).abs() <= 1e-12 * (1.0 + x.norm()));
                let back = rotate_exp(&-v, &y);
                prop_assert!((back - x).norm() <= 1e-12 * (1.0 + x.norm()));
            }

            #[test]
            fn projectors_are_complementary(theta in vec3(100.0)) {
                prop_assume!(theta.norm() > 1e-6);
                let (p, q) = projectors(&theta).unwrap();
                prop_assert!((p * q).abs().max() < 1e-14);
                prop_assert!((p * p - p).abs().max() < 1e-14);
                prop_assert!((q * q - q).abs().max() < 1e-14);
                prop_assert!((p * theta - theta).norm() < 1e-13 * theta.norm());
            }
        }
    }
}

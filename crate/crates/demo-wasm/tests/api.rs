use sphere_projection_demo::{kappa_curves, track, vmf_samples, MAX_DURATION_S};

#[test]
fn kappa_curves_cover_the_range() {
    let c = kappa_curves(10.0, 101).unwrap();
    assert_eq!(c.r.len(), 101);
    assert_eq!((c.r[0], c.r[100]), (0.0, 10.0));
    assert_eq!(c.kappa_prime[0], 0.0);
    assert!((c.kappa_double_prime[0] - 1.0 / 3.0).abs() < 1e-15);
    assert!(c.kappa_prime.windows(2).all(|w| w[0] < w[1]));
    assert!(c.kappa_double_prime.windows(2).all(|w| w[0] > w[1]));
    assert!(kappa_curves(0.0, 10).is_err());
    assert!(kappa_curves(5.0, 1).is_err());
}

#[test]
fn tracking_returns_aligned_series() {
    let t = track(1e-2, 1e-2, 1.0, 7).unwrap();
    let n = t.times.len();
    assert_eq!(n, 1001);
    assert_eq!(t.truth.len(), 3 * n);
    for (errors, mean) in t.errors.iter().zip(t.mean_errors) {
        assert_eq!(errors.len(), n);
        assert!(errors[10..].iter().all(|e| (0.0..=180.0).contains(e)));
        assert!(mean > 0.0 && mean < 10.0);
    }
    // VMF estimates are undefined at the uniform start.
    assert!(t.errors[0][0].is_nan());
    // NaN entries defeat PartialEq, so compare renderings.
    assert_eq!(
        format!("{t:?}"),
        format!("{:?}", track(1e-2, 1e-2, 1.0, 7).unwrap())
    );
}

#[test]
fn tracking_rejects_bad_durations() {
    assert!(track(1e-2, 1e-2, 0.0, 1).is_err());
    assert!(track(1e-2, 1e-2, MAX_DURATION_S + 1.0, 1).is_err());
    assert!(track(1e-2, 1e-2, 0.004, 1).is_err());
    assert!(track(-1.0, 1e-2, 1.0, 1).is_err());
}

#[test]
fn samples_are_unit_vectors_near_the_expected_mean() {
    let s = vmf_samples([0.0, 0.0, 20.0], 20_000, 3).unwrap();
    assert_eq!(s.points.len(), 60_000);
    let mut mean = [0.0; 3];
    for p in s.points.chunks(3) {
        let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        for k in 0..3 {
            mean[k] += p[k] / 20_000.0;
        }
    }
    for k in 0..3 {
        assert!(
            (mean[k] - s.expected_mean[k]).abs() < 5e-3,
            "{mean:?} vs {:?}",
            s.expected_mean
        );
    }
    assert!(vmf_samples([f64::NAN, 0.0, 0.0], 10, 0).is_err());
}

use sphere_projection::experiment::{run_monte_carlo, Estimator, ExperimentConfig};

#[test]
fn errors_grow_with_both_noise_levels() {
    let cfg = ExperimentConfig {
        runs: 100,
        duration_s: 2.0,
        ..ExperimentConfig::default()
    };
    let table = run_monte_carlo(&cfg).unwrap();
    for e in Estimator::ALL {
        let mean = |a: f64, s: f64| table.cell(a, s).unwrap().mean(e).unwrap();
        for &s in &cfg.s_values {
            assert!(
                mean(1e-3, s) <= mean(1e-2, s),
                "{e} not monotone in α² at s = {s}"
            );
        }
        for &a in &cfg.alpha2_values {
            assert!(
                mean(a, 1e-3) <= mean(a, 1e-2),
                "{e} not monotone in s at α² = {a}"
            );
        }
    }
}

#[test]
fn failed_runs_are_counted_not_averaged() {
    let cfg = ExperimentConfig {
        runs: 3,
        duration_s: 0.004,
        ..ExperimentConfig::default()
    };
    let table = run_monte_carlo(&cfg).unwrap();
    assert_eq!(table.empty_cells().len(), 16);
    for cell in &table.cells {
        for e in Estimator::ALL {
            let summary = cell.get(e).unwrap();
            assert_eq!((summary.successful_runs, summary.failed_runs), (0, 3));
            assert!(cell.mean(e).is_none());
        }
    }
}

#[test]
fn every_successful_error_is_a_valid_angle() {
    let cfg = ExperimentConfig {
        runs: 5,
        duration_s: 1.0,
        ..ExperimentConfig::default()
    };
    let table = run_monte_carlo(&cfg).unwrap();
    for cell in &table.cells {
        for e in Estimator::ALL {
            let summary = cell.get(e).unwrap();
            assert_eq!(summary.successful_runs, 5);
            assert!(summary
                .run_errors
                .iter()
                .flatten()
                .all(|v| (0.0..=180.0).contains(v)));
        }
    }
}

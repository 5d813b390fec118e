//! Monte Carlo harness for the gravity-direction tracking study.
//!
//! Every `(α², s)` cell is simulated `runs` times. All estimators of one run see
//! the same scenario. Per-run seeds are derived from the master seed, the cell
//! index and the run index (see [`run_seed`]), so results do not depend on the
//! order in which runs execute.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{simulate_scenario, OuParams, Scenario, ScenarioConfig};
use crate::error::{Error, Result};
use crate::gaussian::{run_gaussian_filter, run_gaussian_smoother, GaussianBelief};
use crate::projection::{run_vmf_filter, run_vmf_smoother};
use crate::sphere_math::{angular_error_deg, Vec3};
use crate::vmf::{MeasurementModel, NaturalParam};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Estimator {
    #[serde(rename = "VMFF", alias = "vmff")]
    Vmff,
    #[serde(rename = "VMFS", alias = "vmfs")]
    Vmfs,
    #[serde(rename = "GF", alias = "gf")]
    Gf,
    #[serde(rename = "GS", alias = "gs")]
    Gs,
}

impl Estimator {
    pub const ALL: [Estimator; 4] = [
        Estimator::Vmff,
        Estimator::Vmfs,
        Estimator::Gf,
        Estimator::Gs,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Estimator::Vmff => "VMFF",
            Estimator::Vmfs => "VMFS",
            Estimator::Gf => "GF",
            Estimator::Gs => "GS",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "vmff" => Ok(Estimator::Vmff),
            "vmfs" => Ok(Estimator::Vmfs),
            "gf" => Ok(Estimator::Gf),
            "gs" => Ok(Estimator::Gs),
            other => Err(Error::Config(format!("unknown estimator '{other}'"))),
        }
    }
}

/// Experiment configuration; the JSON schema is exactly this struct; every field
/// is optional and falls back to [`ExperimentConfig::default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub alpha2_values: Vec<f64>,
    /// Values of the state diffusion strength γ².
    pub s_values: Vec<f64>,
    pub runs: usize,
    pub duration_s: f64,
    pub meas_rate_hz: f64,
    pub substeps_per_meas: usize,
    pub ou: OuParams,
    pub gravity_g: f64,
    pub seed: u64,
    pub estimators: Vec<Estimator>,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            alpha2_values: vec![1e-3, 1e-2],
            s_values: vec![1e-3, 1e-2],
            runs: 100,
            duration_s: 10.0,
            meas_rate_hz: 100.0,
            substeps_per_meas: 10,
            ou: OuParams::default(),
            gravity_g: 9.82,
            seed: 20190814,
            estimators: Estimator::ALL.to_vec(),
            output_dir: PathBuf::from("results"),
        }
    }
}

impl ExperimentConfig {
    /// Parses a config file, or the `config` block of a `summary.json`.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let cfg: ExperimentConfig = match value.get("config") {
            Some(inner) if value.get("cells").is_some() => serde_json::from_value(inner.clone())?,
            _ => serde_json::from_value(value)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        for (name, values) in [
            ("alpha2_values", &self.alpha2_values),
            ("s_values", &self.s_values),
        ] {
            if values.is_empty() {
                return Err(Error::Config(format!("{name} is empty")));
            }
            if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        self.scenario_config(self.alpha2_values[0], self.s_values[0], 0)
            .validate()
    }

    /// The `(α², s)` cells in row-major order: α² outer, s inner.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        self.alpha2_values
            .iter()
            .flat_map(|&a| self.s_values.iter().map(move |&s| (a, s)))
            .collect()
    }

    pub fn scenario_config(&self, alpha2: f64, s: f64, seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            duration_s: self.duration_s,
            meas_rate_hz: self.meas_rate_hz,
            substeps_per_meas: self.substeps_per_meas,
            gamma2: s,
            model: MeasurementModel {
                gain_g: self.gravity_g,
                alpha2,
            },
            ou: self.ou,
            seed,
        }
    }

    fn estimator_order(&self) -> Vec<Estimator> {
        let mut v = self.estimators.clone();
        v.sort();
        v.dedup();
        v
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(splitmix64(splitmix64(master) ^ cell) ^ run)`; seeds a ChaCha8
/// stream for the run.
pub fn run_seed(master: u64, cell: usize, run: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ cell as u64) ^ run as u64)
}

/// Mean great-circle error of `estimates` against `truth` over grid points
/// `from..`. A missing estimate is an error.
pub fn mean_angular_error(truth: &[Vec3], estimates: &[Option<Vec3>], from: usize) -> Result<f64> {
    if from >= truth.len() {
        return Err(Error::EmptyInput(
            "no grid points after the first measurement",
        ));
    }
    let mut sum = 0.0;
    for (i, (x, e)) in truth.iter().zip(estimates).enumerate().skip(from) {
        let e = e
            .ok_or(Error::DegenerateMean { norm: 0.0 })
            .map_err(|err| Error::Domain(format!("no point estimate at grid point {i}: {err}")))?;
        sum += angular_error_deg(&e, x)?;
    }
    Ok(sum / (truth.len() - from) as f64)
}

/// Mean angular error of each requested estimator on one scenario, in the order given.
pub fn evaluate_estimators(
    scenario: &Scenario,
    gamma2: f64,
    model: &MeasurementModel,
    estimators: &[Estimator],
) -> Vec<Result<f64>> {
    let from = match scenario.first_measurement_index() {
        Some(i) => i,
        None => {
            return estimators
                .iter()
                .map(|_| Err(Error::EmptyInput("scenario has no measurements")))
                .collect()
        }
    };
    let wants = |e: Estimator| estimators.contains(&e);

    let vmf_filter = (wants(Estimator::Vmff) || wants(Estimator::Vmfs))
        .then(|| run_vmf_filter(scenario, gamma2, model, NaturalParam::UNIFORM));
    let gauss_filter = (wants(Estimator::Gf) || wants(Estimator::Gs))
        .then(|| run_gaussian_filter(scenario, gamma2, model, GaussianBelief::uniform_sphere()));

    let shared_failure = |e: &Error| Error::Domain(format!("filter failed: {e}"));

    estimators
        .iter()
        .map(|est| match est {
            Estimator::Vmff => match vmf_filter.as_ref().expect("requested") {
                Ok(f) => mean_angular_error(&scenario.truth, &f.modes(), from),
                Err(e) => Err(shared_failure(e)),
            },
            Estimator::Vmfs => match vmf_filter.as_ref().expect("requested") {
                Ok(f) => run_vmf_smoother(f, scenario, gamma2)
                    .and_then(|s| mean_angular_error(&scenario.truth, &s.modes(), from)),
                Err(e) => Err(shared_failure(e)),
            },
            Estimator::Gf => match gauss_filter.as_ref().expect("requested") {
                Ok(f) => mean_angular_error(&scenario.truth, &f.estimates(), from),
                Err(e) => Err(shared_failure(e)),
            },
            Estimator::Gs => match gauss_filter.as_ref().expect("requested") {
                Ok(f) => run_gaussian_smoother(f, scenario, gamma2)
                    .and_then(|s| mean_angular_error(&scenario.truth, &s.estimates(), from)),
                Err(e) => Err(shared_failure(e)),
            },
        })
        .collect()
}

/// Arithmetic mean and standard error of the mean.
pub fn aggregate_metrics(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptyInput("no values to aggregate"));
    }
    let n = values.len() as f64;
    // Shifted by the first value: identical inputs give exactly (x, 0).
    let shift = values[0];
    let offset = values.iter().map(|v| v - shift).sum::<f64>() / n;
    let mean = shift + offset;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = values
        .iter()
        .map(|v| (v - shift - offset).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator: Estimator,
    /// Per-run mean angular error in degrees; `None` for failed runs.
    #[serde(skip)]
    pub run_errors: Vec<Option<f64>>,
    pub mean: Option<f64>,
    pub stderr: Option<f64>,
    pub successful_runs: usize,
    pub failed_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub alpha2: f64,
    pub s: f64,
    pub estimators: Vec<EstimatorSummary>,
}

impl CellResult {
    pub fn get(&self, estimator: Estimator) -> Option<&EstimatorSummary> {
        self.estimators.iter().find(|e| e.estimator == estimator)
    }

    pub fn mean(&self, estimator: Estimator) -> Option<f64> {
        self.get(estimator).and_then(|e| e.mean)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub config: ExperimentConfig,
    pub cells: Vec<CellResult>,
}

impl ResultTable {
    pub fn cell(&self, alpha2: f64, s: f64) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.alpha2 == alpha2 && c.s == s)
    }

    /// Cells where some requested estimator has no successful run.
    pub fn empty_cells(&self) -> Vec<(f64, f64, Estimator)> {
        self.cells
            .iter()
            .flat_map(|c| {
                c.estimators
                    .iter()
                    .filter(|e| e.successful_runs == 0)
                    .map(move |e| (c.alpha2, c.s, e.estimator))
            })
            .collect()
    }
}

/// Runs the full sweep. Runs execute in parallel; aggregation is in run order.
pub fn run_monte_carlo(config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate()?;
    let estimators = config.estimator_order();
    let mut cells = Vec::new();

    for (cell_index, (alpha2, s)) in config.cells().into_iter().enumerate() {
        let per_run: Vec<Vec<Option<f64>>> = (0..config.runs)
            .into_par_iter()
            .map(|run| {
                let seed = run_seed(config.seed, cell_index, run);
                let scenario_cfg = config.scenario_config(alpha2, s, seed);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let scenario = match simulate_scenario(&scenario_cfg, &mut rng) {
                    Ok(sc) => sc,
                    Err(e) => {
                        warn!("cell (α²={alpha2}, s={s}) run {run}: simulation failed: {e}");
                        return vec![None; estimators.len()];
                    }
                };
                evaluate_estimators(&scenario, s, &scenario_cfg.model, &estimators)
                    .into_iter()
                    .zip(&estimators)
                    .map(|(r, est)| match r {
                        Ok(v) if v.is_finite() => Some(v),
                        Ok(v) => {
                            warn!("cell (α²={alpha2}, s={s}) run {run}: {est} produced {v}");
                            None
                        }
                        Err(e) => {
                            warn!("cell (α²={alpha2}, s={s}) run {run}: {est} failed: {e}");
                            None
                        }
                    })
                    .collect()
            })
            .collect();

        let summaries = estimators
            .iter()
            .enumerate()
            .map(|(k, &estimator)| {
                let run_errors: Vec<Option<f64>> = per_run.iter().map(|r| r[k]).collect();
                let ok: Vec<f64> = run_errors.iter().flatten().copied().collect();
                let (mean, stderr) = match aggregate_metrics(&ok) {
                    Ok((m, se)) => (Some(m), Some(se)),
                    Err(_) => (None, None),
                };
                let failed = run_errors.len() - ok.len();
                if failed > 0 {
                    warn!(
                        "cell (α²={alpha2}, s={s}) {estimator}: {failed} of {} runs failed",
                        config.runs
                    );
                }
                EstimatorSummary {
                    estimator,
                    run_errors,
                    mean,
                    stderr,
                    successful_runs: ok.len(),
                    failed_runs: failed,
                }
            })
            .collect();
        cells.push(CellResult {
            alpha2,
            s,
            estimators: summaries,
        });
    }

    Ok(ResultTable {
        config: config.clone(),
        cells,
    })
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub cells: Vec<CellResult>,
}

impl Summary {
    pub fn from_table(table: &ResultTable) -> Self {
        let cells = table
            .cells
            .iter()
            .map(|c| CellResult {
                alpha2: c.alpha2,
                s: c.s,
                estimators: c
                    .estimators
                    .iter()
                    .map(|e| EstimatorSummary {
                        mean: e.mean.map(round4),
                        stderr: e.stderr.map(round4),
                        run_errors: Vec::new(),
                        ..e.clone()
                    })
                    .collect(),
            })
            .collect();
        Summary {
            config: table.config.clone(),
            seed: table.config.seed,
            cells,
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Table-style rendering: one row per `(α², s)` cell, one column per estimator.
    pub fn render_table(&self) -> String {
        let estimators: Vec<Estimator> = self
            .cells
            .first()
            .map(|c| c.estimators.iter().map(|e| e.estimator).collect())
            .unwrap_or_default();
        let mut out = String::from("Mean angular error (degrees)\n");
        out.push_str(&format!("{:<16}", "(alpha2, s)"));
        for e in &estimators {
            out.push_str(&format!(" | {:>16}", e.label()));
        }
        out.push('\n');
        out.push_str(&"-".repeat(16 + 19 * estimators.len()));
        out.push('\n');
        for c in &self.cells {
            let best = c
                .estimators
                .iter()
                .filter_map(|e| e.mean)
                .fold(f64::INFINITY, f64::min);
            out.push_str(&format!(
                "{:<16}",
                format!("({:.0e}, {:.0e})", c.alpha2, c.s)
            ));
            for e in &c.estimators {
                let cell = match (e.mean, e.stderr) {
                    (Some(m), Some(se)) => {
                        let mark = if m == best { "*" } else { " " };
                        format!("{m:.4} ±{se:.4}{mark}")
                    }
                    _ => "failed".to_string(),
                };
                out.push_str(&format!(" | {cell:>16}"));
            }
            out.push('\n');
        }
        out.push_str("* lowest mean error in the row; ± is one standard error\n");
        out
    }
}

/// Writes `results.csv` (one row per run and estimator) and `summary.json`.
pub fn write_outputs(table: &ResultTable, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let csv_path = dir.join("results.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| Error::csv(&csv_path, e))?;
    w.write_record(["alpha2", "s", "estimator", "run", "mean_angular_error_deg"])
        .map_err(|e| Error::csv(&csv_path, e))?;
    for c in &table.cells {
        for e in &c.estimators {
            for (run, err) in e.run_errors.iter().enumerate() {
                w.write_record([
                    c.alpha2.to_string(),
                    c.s.to_string(),
                    e.estimator.label().to_string(),
                    run.to_string(),
                    err.map(|v| v.to_string()).unwrap_or_default(),
                ])
                .map_err(|e| Error::csv(&csv_path, e))?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;

    let json_path = dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(&Summary::from_table(table))?;
    text.push('\n');
    fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))
}

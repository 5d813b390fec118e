//! Ground-truth generation for the gravity-direction tracking problem.
//!
//! ```text
//! dX = −Ω̆(t) × X dt − γ² X dt + γ X × dW     (X ∈ S²)
//! Y(t_n) | X(t_n) ∼ N(g X(t_n), α² I)
//! ```
//!
//! Each coordinate of the gyroscope signal Ω̆ is an Ornstein-Uhlenbeck process
//! sampled at the measurement rate and held constant in between. The state is
//! advanced on a finer grid by rotation increments, which keeps it on the sphere.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere_math::{rotate_exp, sample_uniform_sphere, Vec3, UNIT_NORM_TOL};
use crate::vmf::MeasurementModel;

/// Per-coordinate OU parameters: `dΩ = rate·Ω dt + diffusion·dB`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuParams {
    /// Drift coefficient (negative for a mean-reverting process), 1/s.
    pub reversion_rate: f64,
    /// Coefficient multiplying dB, rad/s per √s.
    pub diffusion: f64,
}

impl Default for OuParams {
    fn default() -> Self {
        OuParams {
            reversion_rate: -5.0,
            diffusion: 2.5,
        }
    }
}

impl OuParams {
    /// Per-coordinate stationary variance `diffusion² / (2|rate|)`.
    pub fn stationary_variance(&self) -> f64 {
        self.diffusion * self.diffusion / (2.0 * self.reversion_rate.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub duration_s: f64,
    pub meas_rate_hz: f64,
    pub substeps_per_meas: usize,
    /// Diffusion strength γ² of the state SDE.
    pub gamma2: f64,
    pub model: MeasurementModel,
    pub ou: OuParams,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            duration_s: 10.0,
            meas_rate_hz: 100.0,
            substeps_per_meas: 10,
            gamma2: 1e-3,
            model: MeasurementModel {
                gain_g: 9.82,
                alpha2: 1e-3,
            },
            ou: OuParams::default(),
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::Config(format!(
                "duration_s must be positive, got {}",
                self.duration_s
            )));
        }
        if !(self.meas_rate_hz > 0.0 && self.meas_rate_hz.is_finite()) {
            return Err(Error::Config(format!(
                "meas_rate_hz must be positive, got {}",
                self.meas_rate_hz
            )));
        }
        if self.substeps_per_meas == 0 {
            return Err(Error::Config("substeps_per_meas must be at least 1".into()));
        }
        if !(self.gamma2 >= 0.0 && self.gamma2.is_finite()) {
            return Err(Error::Config(format!(
                "gamma2 must be nonnegative, got {}",
                self.gamma2
            )));
        }
        if !self.ou.reversion_rate.is_finite() || !(self.ou.diffusion >= 0.0) {
            return Err(Error::Config(format!(
                "invalid OU parameters {:?}",
                self.ou
            )));
        }
        self.model.validate()
    }

    /// Number of measurement periods in the trajectory.
    pub fn measurement_count(&self) -> usize {
        (self.duration_s * self.meas_rate_hz).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    /// Index into the fine time grid.
    pub index: usize,
    pub time: f64,
    pub y: Vec3,
}

/// A simulated trajectory on the fine grid.
///
/// `gyro[i]` is the angular velocity in force over `[times[i], times[i + 1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub times: Vec<f64>,
    pub truth: Vec<Vec3>,
    pub gyro: Vec<Vec3>,
    pub measurements: Vec<Measurement>,
}

impl Scenario {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Measurement at each grid point, if any.
    pub fn measurement_slots(&self) -> Vec<Option<Vec3>> {
        let mut slots = vec![None; self.times.len()];
        for m in &self.measurements {
            slots[m.index] = Some(m.y);
        }
        slots
    }

    /// Grid index of the first measurement.
    pub fn first_measurement_index(&self) -> Option<usize> {
        self.measurements.iter().map(|m| m.index).min()
    }

    /// Same trajectory with every measurement removed.
    pub fn without_measurements(&self) -> Scenario {
        Scenario {
            measurements: Vec::new(),
            ..self.clone()
        }
    }
}

/// Exact OU transition over `dt`, applied per coordinate.
pub fn ou_step<R: Rng + ?Sized>(omega: &Vec3, dt: f64, params: &OuParams, rng: &mut R) -> Vec3 {
    if dt == 0.0 {
        return *omega;
    }
    let a = params.reversion_rate;
    let decay = (a * dt).exp();
    let var = if a == 0.0 {
        params.diffusion * params.diffusion * dt
    } else {
        params.diffusion * params.diffusion * (2.0 * a * dt).exp_m1() / (2.0 * a)
    };
    let sd = var.max(0.0).sqrt();
    omega.map(|w| decay * w + sd * rng.sample::<f64, _>(StandardNormal))
}

/// One rotation-increment step of the sphere SDE:
/// `x ← exp([−Ω̆ dt − γ ΔW]_×) x` with `ΔW ∼ N(0, dt I)`.
pub fn sde_step<R: Rng + ?Sized>(
    x: &Vec3,
    omega: &Vec3,
    gamma: f64,
    dt: f64,
    rng: &mut R,
) -> Result<Vec3> {
    if (x.norm() - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::Domain(format!(
            "sde_step needs a unit state, got norm {}",
            x.norm()
        )));
    }
    let sd = dt.sqrt();
    let dw = Vec3::from_fn(|_, _| sd * rng.sample::<f64, _>(StandardNormal));
    Ok(rotate_exp(&(-omega * dt - dw * gamma), x))
}

/// Accelerometer reading `g x + α ξ`.
pub fn measure<R: Rng + ?Sized>(x: &Vec3, model: &MeasurementModel, rng: &mut R) -> Vec3 {
    let sd = model.alpha2.sqrt();
    let noise = Vec3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
    x * model.gain_g + noise * sd
}

/// Simulates one trajectory.
///
/// Initial truth is uniform on S², the gyroscope starts from the OU stationary law.
/// Measurements are taken at `k / meas_rate_hz` for `k = 1..=K`. The random
/// stream is consumed in a fixed order so the result depends only on the stream.
pub fn simulate_scenario<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    rng: &mut R,
) -> Result<Scenario> {
    config.validate()?;
    let periods = config.measurement_count();
    let sub = config.substeps_per_meas;
    let meas_dt = 1.0 / config.meas_rate_hz;
    let dt = meas_dt / sub as f64;
    let n = periods * sub + 1;
    let gamma = config.gamma2.sqrt();

    let mut times = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    let mut gyro = Vec::with_capacity(n);
    let mut measurements = Vec::with_capacity(periods);

    let mut x = sample_uniform_sphere(rng);
    let sd0 = config.ou.stationary_variance().sqrt();
    let mut omega = Vec3::from_fn(|_, _| sd0 * rng.sample::<f64, _>(StandardNormal));

    times.push(0.0);
    truth.push(x);
    for i in 0..n - 1 {
        if i > 0 && i % sub == 0 {
            omega = ou_step(&omega, meas_dt, &config.ou, rng);
        }
        gyro.push(omega);
        x = sde_step(&x, &omega, gamma, dt, rng)?;
        let k = i + 1;
        // Grid times from integer counts, so measurement instants are exact multiples.
        let t = (k / sub) as f64 * meas_dt + (k % sub) as f64 * dt;
        times.push(t);
        truth.push(x);
        if k % sub == 0 {
            let y = measure(&x, &config.model, rng);
            measurements.push(Measurement {
                index: k,
                time: t,
                y,
            });
        }
    }
    // The last gyro sample has no interval after it; repeat it so columns align.
    gyro.push(omega);

    Ok(Scenario {
        times,
        truth,
        gyro,
        measurements,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioRow {
    t: f64,
    truth_x: f64,
    truth_y: f64,
    truth_z: f64,
    gyro_x: f64,
    gyro_y: f64,
    gyro_z: f64,
    meas_flag: u8,
    y_x: Option<f64>,
    y_y: Option<f64>,
    y_z: Option<f64>,
}

/// Writes the scenario as one CSV row per grid point. Measurement columns are
/// empty where `meas_flag` is 0.
pub fn write_scenario_csv(scenario: &Scenario, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let slots = scenario.measurement_slots();
    for i in 0..scenario.len() {
        let (x, g) = (scenario.truth[i], scenario.gyro[i]);
        let y = slots[i];
        w.serialize(ScenarioRow {
            t: scenario.times[i],
            truth_x: x.x,
            truth_y: x.y,
            truth_z: x.z,
            gyro_x: g.x,
            gyro_y: g.y,
            gyro_z: g.z,
            meas_flag: y.is_some() as u8,
            y_x: y.map(|v| v.x),
            y_y: y.map(|v| v.y),
            y_z: y.map(|v| v.z),
        })
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a scenario written by [`write_scenario_csv`].
pub fn read_scenario_csv(path: &Path) -> Result<Scenario> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut s = Scenario {
        times: Vec::new(),
        truth: Vec::new(),
        gyro: Vec::new(),
        measurements: Vec::new(),
    };
    for (index, row) in r.deserialize::<ScenarioRow>().enumerate() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        s.times.push(row.t);
        s.truth
            .push(Vec3::new(row.truth_x, row.truth_y, row.truth_z));
        s.gyro.push(Vec3::new(row.gyro_x, row.gyro_y, row.gyro_z));
        if row.meas_flag != 0 {
            match (row.y_x, row.y_y, row.y_z) {
                (Some(a), Some(b), Some(c)) => s.measurements.push(Measurement {
                    index,
                    time: row.t,
                    y: Vec3::new(a, b, c),
                }),
                _ => {
                    return Err(Error::Config(format!(
                        "{}: row {index} is flagged as a measurement but has empty y columns",
                        path.display()
                    )))
                }
            }
        }
    }
    Ok(s)
}

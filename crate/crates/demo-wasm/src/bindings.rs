//! JavaScript entry points.

use wasm_bindgen::prelude::*;

fn js_err(e: sphere_projection::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct KappaCurves(crate::KappaCurves);

#[wasm_bindgen]
impl KappaCurves {
    #[wasm_bindgen(getter)]
    pub fn r(&self) -> Vec<f64> {
        self.0.r.clone()
    }

    #[wasm_bindgen(getter, js_name = kappaPrime)]
    pub fn kappa_prime(&self) -> Vec<f64> {
        self.0.kappa_prime.clone()
    }

    #[wasm_bindgen(getter, js_name = kappaDoublePrime)]
    pub fn kappa_double_prime(&self) -> Vec<f64> {
        self.0.kappa_double_prime.clone()
    }
}

#[wasm_bindgen(js_name = kappaCurves)]
pub fn kappa_curves(r_max: f64, points: usize) -> Result<KappaCurves, JsError> {
    crate::kappa_curves(r_max, points)
        .map(KappaCurves)
        .map_err(js_err)
}

#[wasm_bindgen]
pub struct Tracking(crate::Tracking);

#[wasm_bindgen]
impl Tracking {
    #[wasm_bindgen(getter)]
    pub fn times(&self) -> Vec<f64> {
        self.0.times.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn truth(&self) -> Vec<f64> {
        self.0.truth.clone()
    }

    /// Per-point errors of estimator `index` (0 VMFF, 1 VMFS, 2 GF, 3 GS).
    pub fn errors(&self, index: usize) -> Option<Vec<f64>> {
        self.0.errors.get(index).cloned()
    }

    #[wasm_bindgen(getter, js_name = meanErrors)]
    pub fn mean_errors(&self) -> Vec<f64> {
        self.0.mean_errors.to_vec()
    }
}

/// Simulates one trajectory and runs VMFF, VMFS, GF and GS on it.
#[wasm_bindgen]
pub fn track(alpha2: f64, s: f64, duration_s: f64, seed: u32) -> Result<Tracking, JsError> {
    crate::track(alpha2, s, duration_s, seed.into())
        .map(Tracking)
        .map_err(js_err)
}

#[wasm_bindgen]
pub struct Samples(crate::Samples);

#[wasm_bindgen]
impl Samples {
    #[wasm_bindgen(getter)]
    pub fn points(&self) -> Vec<f64> {
        self.0.points.clone()
    }

    #[wasm_bindgen(getter, js_name = expectedMean)]
    pub fn expected_mean(&self) -> Vec<f64> {
        self.0.expected_mean.to_vec()
    }
}

#[wasm_bindgen(js_name = vmfSamples)]
pub fn vmf_samples(x: f64, y: f64, z: f64, count: usize, seed: u32) -> Result<Samples, JsError> {
    crate::vmf_samples([x, y, z], count, seed.into())
        .map(Samples)
        .map_err(js_err)
}

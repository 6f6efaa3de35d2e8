//! Browser bindings for the demo page in `www/`.
//!
//! Each export is a thin wrapper over a plain function of the same name in
//! [`demo`], which is what the native tests exercise.

use wasm_bindgen::prelude::*;

pub mod demo {
    use jointstat::cv::{self, estimate_m, response_coeffs, retrieved_char, sample_observed, CvConfig, InputState};
    use jointstat::qubit::{classify_qubit, povm_statistics, retrieve_joint};
    use jointstat::{BlochState, QubitPovm};
    use serde_json::json;

    pub type Result<T> = std::result::Result<T, String>;

    fn state(nbar: f64) -> Result<InputState> {
        if nbar == 0.0 {
            Ok(InputState::vacuum())
        } else {
            InputState::thermal(nbar).map_err(|e| e.to_string())
        }
    }

    /// Observed and retrieved distributions for Bloch vector `s` at
    /// sharpness `eta`, as JSON.
    pub fn qubit_retrieved(eta: f64, sx: f64, sy: f64, sz: f64) -> Result<String> {
        let povm = QubitPovm::new(eta).map_err(|e| e.to_string())?;
        let rho = BlochState::new([sx, sy, sz]).map_err(|e| e.to_string())?;
        let verdict = classify_qubit(&rho, &povm);
        Ok(json!({
            "observed": povm_statistics(&rho, &povm),
            "retrieved": retrieve_joint(&rho, &povm),
            "min_entry_rotated": verdict.min_entry(),
            "nonclassical": verdict.is_nonclassical(),
            "eta_threshold": jointstat::qubit::threshold_eta(rho.norm()),
        })
        .to_string())
    }

    /// Smallest retrieved entry on an `n × n` grid, η ∈ (0, 1] along rows
    /// and |s| ∈ [0, 1] along columns, for states along z.
    pub fn qubit_phase_map(n: usize) -> Result<Vec<f64>> {
        if n < 2 {
            return Err("need n ≥ 2".into());
        }
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            let eta = (i + 1) as f64 / n as f64;
            let povm = QubitPovm::new(eta).map_err(|e| e.to_string())?;
            for j in 0..n {
                let s = j as f64 / (n - 1) as f64;
                let rho = BlochState::along_z(s).map_err(|e| e.to_string())?;
                out.push(retrieve_joint(&rho, &povm).min_entry());
            }
        }
        Ok(out)
    }

    /// Smallest eigenvalue of the retrieved form on an `n × n` grid,
    /// t² ∈ (0, 1) along rows and θ ∈ [0, π] along columns.
    pub fn cv_landscape(nbar: f64, n: usize) -> Result<Vec<f64>> {
        if n < 2 {
            return Err("need n ≥ 2".into());
        }
        let st = state(nbar)?;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            let t2 = (i as f64 + 0.5) / n as f64;
            for j in 0..n {
                let theta = std::f64::consts::PI * j as f64 / (n - 1) as f64;
                let cfg = CvConfig::from_t2(t2, theta).map_err(|e| e.to_string())?;
                out.push(retrieved_char(&st, &cfg).m.eigenvalues().0);
            }
        }
        Ok(out)
    }

    /// Response coefficient, threshold and verdict at one configuration,
    /// as JSON.
    pub fn cv_point(t2: f64, theta: f64, nbar: f64) -> Result<String> {
        let cfg = CvConfig::from_t2(t2, theta).map_err(|e| e.to_string())?;
        let st = state(nbar)?;
        let verdict = cv::classify_cv(&st, &cfg);
        Ok(json!({
            "gamma": response_coeffs(&cfg).gamma,
            "threshold": st.gamma_threshold(),
            "min_eigenvalue": verdict.min_eigenvalue(),
            "verdict": verdict.label(),
        })
        .to_string())
    }

    /// `n` samples `(x̃, ỹ)` flattened as `[x0, y0, x1, y1, …]`.
    pub fn cv_samples(t2: f64, theta: f64, nbar: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
        let cfg = CvConfig::from_t2(t2, theta).map_err(|e| e.to_string())?;
        let xs = sample_observed(&state(nbar)?, &cfg, n, seed).map_err(|e| e.to_string())?;
        Ok(xs.into_iter().flatten().collect())
    }

    /// Simulates `n` samples and estimates γ from them, as JSON.
    pub fn cv_estimate(t2: f64, theta: f64, nbar: f64, n: usize, seed: u64) -> Result<String> {
        let cfg = CvConfig::from_t2(t2, theta).map_err(|e| e.to_string())?;
        let st = state(nbar)?;
        let xs = sample_observed(&st, &cfg, n, seed).map_err(|e| e.to_string())?;
        let est = estimate_m(&xs, &cfg, 0, seed).map_err(|e| e.to_string())?;
        let truth = cv::classify_cv(&st, &cfg);
        Ok(json!({
            "gamma_true": response_coeffs(&cfg).gamma,
            "gamma_hat": est.gamma,
            "threshold": st.gamma_threshold(),
            "verdict_true": truth.label(),
            "verdict_hat": est.verdict().label(),
            "m_hat": est.m,
        })
        .to_string())
    }
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

#[wasm_bindgen]
pub fn qubit_retrieved(eta: f64, sx: f64, sy: f64, sz: f64) -> Result<String, JsError> {
    demo::qubit_retrieved(eta, sx, sy, sz).map_err(js)
}

#[wasm_bindgen]
pub fn qubit_phase_map(n: usize) -> Result<Vec<f64>, JsError> {
    demo::qubit_phase_map(n).map_err(js)
}

#[wasm_bindgen]
pub fn cv_landscape(nbar: f64, n: usize) -> Result<Vec<f64>, JsError> {
    demo::cv_landscape(nbar, n).map_err(js)
}

#[wasm_bindgen]
pub fn cv_point(t2: f64, theta: f64, nbar: f64) -> Result<String, JsError> {
    demo::cv_point(t2, theta, nbar).map_err(js)
}

#[wasm_bindgen]
pub fn cv_samples(t2: f64, theta: f64, nbar: f64, n: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    demo::cv_samples(t2, theta, nbar, n, seed).map_err(js)
}

#[wasm_bindgen]
pub fn cv_estimate(t2: f64, theta: f64, nbar: f64, n: usize, seed: u64) -> Result<String, JsError> {
    demo::cv_estimate(t2, theta, nbar, n, seed).map_err(js)
}

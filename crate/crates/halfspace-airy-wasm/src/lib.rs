//! Browser bindings for a small demo page: the Tracy–Widom `F₂` value, one
//! crossover-kernel evaluation and one interlacing-ensemble sample.
//!
//! Each binding is a thin wrapper over a plain Rust function returning
//! `Result<_, String>`, so the logic is testable on native targets.

use halfspace_airy::ensembles::{run_glauber, Floor};
use halfspace_airy::fredholm::f2_airy_reference;
use halfspace_airy::kernels::{kernel_cross, KernelOptions};
use wasm_bindgen::prelude::*;

/// Largest horizon and curve count accepted by [`sample_ensemble`].
pub const MAX_SAMPLE_SIZE: usize = 200;

/// `F₂(s)` via the Airy-kernel Fredholm determinant.
pub fn f2_value(s: f64) -> Result<f64, String> {
    if !s.is_finite() {
        return Err(format!("s = {s} must be finite"));
    }
    f2_airy_reference(s).map_err(|e| e.to_string())
}

/// `K^cross(s,x; t,y)` as `[k11, k12, k21, k22]` (real parts; the imaginary
/// parts vanish up to quadrature error).
pub fn cross_kernel_value(s: f64, x: f64, t: f64, y: f64, varpi: f64) -> Result<Vec<f64>, String> {
    let k = kernel_cross(s, x, t, y, varpi, &KernelOptions::default()).map_err(|e| e.to_string())?;
    Ok(vec![k.k11.re, k.k12.re, k.k21.re, k.k22.re])
}

/// One Glauber sample of `k` interlacing paths on `⟦0, T⟧` with exit data
/// `y_i = −(i−1)`, common jump parameter `q` and no floor.  Returns the
/// paths row by row (`k·(T+1)` values).
pub fn sample_ensemble(horizon: usize, k: usize, q: f64, n_steps: u32, seed: u32) -> Result<Vec<f64>, String> {
    if k == 0 || k > MAX_SAMPLE_SIZE || horizon > MAX_SAMPLE_SIZE {
        return Err(format!("need 1 ≤ k ≤ {MAX_SAMPLE_SIZE} and T ≤ {MAX_SAMPLE_SIZE}"));
    }
    let y: Vec<i64> = (0..k as i64).map(|i| -i).collect();
    let ens = run_glauber(horizon, &y, &vec![q; k], &Floor::NegInfinity, n_steps as u64, seed as u64).map_err(|e| e.to_string())?;
    Ok(ens.paths.iter().flat_map(|p| p.values().iter().map(|&v| v as f64)).collect())
}

#[wasm_bindgen]
pub fn f2(s: f64) -> Result<f64, JsError> {
    f2_value(s).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn cross_kernel(s: f64, x: f64, t: f64, y: f64, varpi: f64) -> Result<Vec<f64>, JsError> {
    cross_kernel_value(s, x, t, y, varpi).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn sample_paths(horizon: usize, k: usize, q: f64, n_steps: u32, seed: u32) -> Result<Vec<f64>, JsError> {
    sample_ensemble(horizon, k, q, n_steps, seed).map_err(|e| JsError::new(&e))
}

//! Browser bindings: run a suite, draw a tail process path, simulate a series.

use rand::SeedableRng;
use tailproc::estimate::LaneRng;
use tailproc::stats::pareto;
use tailproc::suites::{run_suite, to_csv, Suite, SuiteConfig, DEFAULT_SERIES_LEN};
use tailproc::{Sampling, SpectralModel};
use wasm_bindgen::prelude::*;

fn model(spec: &str) -> Result<SpectralModel, JsError> {
    spec.parse().map_err(|e: tailproc::Error| JsError::new(&e.to_string()))
}

/// Canonical form of a model and its extremal index.
#[wasm_bindgen]
pub fn describe(spec: &str) -> Result<String, JsError> {
    let m = model(spec)?;
    Ok(format!("{m}\ntheta = {:.6}", m.exact_theta()))
}

/// Runs one suite and returns the CSV rows.
#[wasm_bindgen]
pub fn run_check(suite: &str, spec: &str, n: u32, seed: u64) -> Result<String, JsError> {
    let suite: Suite = suite.parse().map_err(|e: tailproc::Error| JsError::new(&e.to_string()))?;
    let m = model(spec)?;
    let cfg = SuiteConfig {
        sampling: Sampling::new(n as usize, seed).with_lanes(1),
        series_len: DEFAULT_SERIES_LEN,
    };
    let outcome = run_suite(suite, &m, &cfg);
    let mut text = to_csv(std::slice::from_ref(&outcome)).map_err(|e| JsError::new(&e.to_string()))?;
    if let Some(why) = &outcome.skipped {
        text.push_str(&format!("# skipped: {why}\n"));
    }
    for note in &outcome.notes {
        text.push_str(&format!("# {note}\n"));
    }
    Ok(text)
}

/// One draw of `Y = R Θ` on `lo..=hi`.
#[wasm_bindgen]
pub fn tail_path(spec: &str, seed: u64, lo: i32, hi: i32) -> Result<Vec<f64>, JsError> {
    let m = model(spec)?;
    let mut rng = LaneRng::seed_from_u64(seed);
    let y = m.sample_spectral(&mut rng).scale(pareto(&mut rng, m.alpha()));
    Ok((lo..=hi).map(|j| y.get(j as i64)).collect())
}

/// A stationary series whose tail process is the model's.
#[wasm_bindgen]
pub fn series(spec: &str, len: u32, seed: u64) -> Result<Vec<f64>, JsError> {
    let m = model(spec)?;
    let mut rng = LaneRng::seed_from_u64(seed);
    m.simulate_series(len as usize, &mut rng)
        .map_err(|e| JsError::new(&e.to_string()))
}

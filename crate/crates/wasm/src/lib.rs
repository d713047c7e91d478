//! Browser bindings for the learngene demo page.
//!
//! Every exported function works on row-major `rows × cols` matrices passed
//! as flat `f64` slices. The plain functions are usable (and tested) natively;
//! the `wasm32` build wraps them for JavaScript.

use front_core::analysis::{compaction, energy_spectrum};
use front_core::dct::{dct_full, idct_full, Spectrum};
use front_core::learngene::{build_mask, extract_block, FrequencyRatio};
use front_core::reg::build_penalty_mask;
use front_core::resize::{reconstruct, TargetDims};
use front_core::tensor::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn matrix(data: &[f64], rows: usize, cols: usize) -> Result<Tensor, String> {
    Tensor::new(vec![rows, cols], data.to_vec()).map_err(|e| e.to_string())
}

fn ratio(r: f64) -> Result<FrequencyRatio, String> {
    FrequencyRatio::new(r).map_err(|e| e.to_string())
}

/// A synthetic weight matrix whose energy decays with frequency, plus white noise.
pub fn sample_weights(rows: usize, cols: usize, seed: u64, noise: f64) -> Result<Vec<f64>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).map_err(|e| e.to_string())?;
    let spectrum = Tensor::from_fn(vec![rows, cols], |i| {
        let f = i[0] as f64 / rows as f64 + i[1] as f64 / cols as f64;
        unit.sample(&mut rng) * (-12.0 * f).exp()
    })
    .map_err(|e| e.to_string())?;
    let smooth = idct_full(&Spectrum::new(spectrum));
    let scale = smooth.frobenius_norm() / (smooth.len() as f64).sqrt();
    Ok(smooth
        .data()
        .iter()
        .map(|v| v + noise * scale * unit.sample(&mut rng))
        .collect())
}

/// Per-axis keep counts `[k_rows, k_cols]` at ratio `r`.
pub fn keep_counts(rows: usize, cols: usize, r: f64) -> Result<Vec<usize>, String> {
    Ok(build_mask(&[rows, cols], ratio(r)?).keep)
}

/// Extracts the learngene block at `r` and reconstructs an `out_rows × out_cols` matrix.
pub fn resize_weights(
    data: &[f64],
    rows: usize,
    cols: usize,
    r: f64,
    out_rows: usize,
    out_cols: usize,
) -> Result<Vec<f64>, String> {
    let block = extract_block(&matrix(data, rows, cols)?, ratio(r)?).map_err(|e| e.to_string())?;
    let target = TargetDims::new(vec![out_rows, out_cols]).map_err(|e| e.to_string())?;
    reconstruct(&block, &target)
        .map(Tensor::into_data)
        .map_err(|e| e.to_string())
}

/// `log10(|X| + 1e-12)` of the 2-D DCT coefficients.
pub fn spectrum_log_magnitude(data: &[f64], rows: usize, cols: usize) -> Result<Vec<f64>, String> {
    let s = dct_full(&matrix(data, rows, cols)?);
    Ok(s.data().iter().map(|c| (c.abs() + 1e-12).log10()).collect())
}

pub fn penalty_mask(rows: usize, cols: usize, gamma: f64) -> Result<Vec<f64>, String> {
    build_penalty_mask(&[rows, cols], &[gamma, gamma])
        .map(|m| m.values.into_data())
        .map_err(|e| e.to_string())
}

pub fn energy_histogram(data: &[f64], rows: usize, cols: usize, bins: usize) -> Result<Vec<f64>, String> {
    energy_spectrum(&matrix(data, rows, cols)?, bins).map_err(|e| e.to_string())
}

/// Compaction at `r = i / points` for `i = 1..=points`.
pub fn compaction_curve(data: &[f64], rows: usize, cols: usize, points: usize) -> Result<Vec<f64>, String> {
    if points == 0 {
        return Err("points must be at least 1".into());
    }
    let t = matrix(data, rows, cols)?;
    (1..=points)
        .map(|i| Ok(compaction(&t, ratio(i as f64 / points as f64)?)))
        .collect()
}

#[cfg(target_arch = "wasm32")]
mod bindings {
    use wasm_bindgen::prelude::*;

    fn js<T>(r: Result<T, String>) -> Result<T, JsError> {
        r.map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = sampleWeights)]
    pub fn sample_weights(rows: usize, cols: usize, seed: u32, noise: f64) -> Result<Vec<f64>, JsError> {
        js(super::sample_weights(rows, cols, seed as u64, noise))
    }

    #[wasm_bindgen(js_name = keepCounts)]
    pub fn keep_counts(rows: usize, cols: usize, r: f64) -> Result<Vec<u32>, JsError> {
        js(super::keep_counts(rows, cols, r)).map(|k| k.into_iter().map(|v| v as u32).collect())
    }

    #[wasm_bindgen(js_name = resizeWeights)]
    pub fn resize_weights(
        data: &[f64],
        rows: usize,
        cols: usize,
        r: f64,
        out_rows: usize,
        out_cols: usize,
    ) -> Result<Vec<f64>, JsError> {
        js(super::resize_weights(data, rows, cols, r, out_rows, out_cols))
    }

    #[wasm_bindgen(js_name = spectrumLogMagnitude)]
    pub fn spectrum_log_magnitude(data: &[f64], rows: usize, cols: usize) -> Result<Vec<f64>, JsError> {
        js(super::spectrum_log_magnitude(data, rows, cols))
    }

    #[wasm_bindgen(js_name = penaltyMask)]
    pub fn penalty_mask(rows: usize, cols: usize, gamma: f64) -> Result<Vec<f64>, JsError> {
        js(super::penalty_mask(rows, cols, gamma))
    }

    #[wasm_bindgen(js_name = energyHistogram)]
    pub fn energy_histogram(data: &[f64], rows: usize, cols: usize, bins: usize) -> Result<Vec<f64>, JsError> {
        js(super::energy_histogram(data, rows, cols, bins))
    }

    #[wasm_bindgen(js_name = compactionCurve)]
    pub fn compaction_curve(data: &[f64], rows: usize, cols: usize, points: usize) -> Result<Vec<f64>, JsError> {
        js(super::compaction_curve(data, rows, cols, points))
    }
}

//! Spectral diagnostics: energy distribution, compaction and low-frequency similarity.

use crate::dct::{dct_full, Spectrum};
use crate::error::{Error, Result};
use crate::learngene::{build_mask, FrequencyRatio};
use crate::tensor::{next_index, Tensor};

/// Fraction of spectral energy per normalized-frequency bin.
///
/// A coefficient at index `i` has frequency `max_d(i_d / n_d)`, so bin `b`
/// collects the shell between the cubic corners `b/bins` and `(b+1)/bins`.
/// A zero tensor yields an all-zero histogram.
pub fn energy_spectrum(t: &Tensor, bins: usize) -> Result<Vec<f64>> {
    if bins == 0 {
        return Err(Error::InvalidArgument("bins must be at least 1".into()));
    }
    let spectrum = dct_full(t);
    let shape = spectrum.shape().to_vec();
    let mut hist = vec![0.0; bins];
    let mut idx = vec![0usize; shape.len()];
    for &c in spectrum.data() {
        let rho = idx
            .iter()
            .zip(&shape)
            .map(|(&i, &n)| i as f64 / n as f64)
            .fold(0.0, f64::max);
        let bin = ((rho * bins as f64) as usize).min(bins - 1);
        hist[bin] += c * c;
        next_index(&mut idx, &shape);
    }
    let total: f64 = hist.iter().sum();
    if total > 0.0 {
        hist.iter_mut().for_each(|h| *h /= total);
    }
    Ok(hist)
}

fn corner_energy(spectrum: &Spectrum, keep: &[usize]) -> f64 {
    spectrum
        .resized(keep)
        .map(|c| c.energy())
        .unwrap_or_default()
}

/// Low-frequency corner energy and total energy of one tensor.
pub fn split_energy(t: &Tensor, r: FrequencyRatio) -> (f64, f64) {
    let spectrum = dct_full(t);
    let mask = build_mask(t.shape(), r);
    (corner_energy(&spectrum, &mask.keep), spectrum.energy())
}

/// Share of spectral energy inside the low-frequency corner; 1 for a zero tensor.
pub fn compaction(t: &Tensor, r: FrequencyRatio) -> f64 {
    let (low, total) = split_energy(t, r);
    if total == 0.0 {
        1.0
    } else {
        (low / total).min(1.0)
    }
}

fn corner(t: &Tensor, r: FrequencyRatio) -> Result<Spectrum> {
    dct_full(t).resized(&build_mask(t.shape(), r).keep)
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

/// Cosine similarity of the low-frequency corners of `a` and `b`.
pub fn lowfreq_similarity(a: &Tensor, b: &Tensor, r: FrequencyRatio) -> Result<f64> {
    aggregate_similarity(&[(a, b)], r)
}

/// Cosine similarity over the concatenated low-frequency corners of many pairs.
pub fn aggregate_similarity(pairs: &[(&Tensor, &Tensor)], r: FrequencyRatio) -> Result<f64> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (a, b) in pairs {
        if a.shape() != b.shape() {
            return Err(Error::ShapeMismatch(format!(
                "{:?} vs {:?}",
                a.shape(),
                b.shape()
            )));
        }
        xs.extend_from_slice(corner(a, r)?.data());
        ys.extend_from_slice(corner(b, r)?.data());
    }
    Ok(cosine(&xs, &ys))
}

//! Soft high-frequency penalty: mask, regularizer value, gradient and total loss.
//!
//! The penalty weight of coefficient `i` is `Π_d (1 − exp(−(i_d / n_d) / γ_d))`,
//! which is zero on every DC plane and approaches one at high frequencies. A
//! group's regularizer is the masked energy divided by the number of nonzero
//! masked coefficients.

use std::collections::BTreeMap;

use crate::dct::{dct_full, idct_full, Spectrum};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const DEFAULT_GAMMA: f64 = 0.25;
pub const DEFAULT_LAMBDA: f64 = 0.002;

#[derive(Clone, Debug, PartialEq)]
pub struct PenaltyMask {
    pub values: Tensor,
    pub gammas: Vec<f64>,
}

impl PenaltyMask {
    pub fn shape(&self) -> &[usize] {
        self.values.shape()
    }
}

fn check_gamma(g: f64) -> Result<f64> {
    if g > 0.0 && g.is_finite() {
        Ok(g)
    } else {
        Err(Error::NonPositiveGamma(g))
    }
}

pub fn build_penalty_mask(shape: &[usize], gammas: &[f64]) -> Result<PenaltyMask> {
    if gammas.len() != shape.len() {
        return Err(Error::RankMismatch {
            expected: shape.len(),
            actual: gammas.len(),
        });
    }
    for &g in gammas {
        check_gamma(g)?;
    }
    let factors: Vec<Vec<f64>> = shape
        .iter()
        .zip(gammas)
        .map(|(&n, &g)| {
            (0..n)
                .map(|i| 1.0 - (-(i as f64 / n as f64) / g).exp())
                .collect()
        })
        .collect();
    let values = Tensor::from_fn(shape.to_vec(), |idx| {
        idx.iter().zip(&factors).map(|(&i, f)| f[i]).product()
    })?;
    Ok(PenaltyMask {
        values,
        gammas: gammas.to_vec(),
    })
}

/// Decay rates and the task/regularizer mixing weight.
#[derive(Clone, Debug, PartialEq)]
pub struct RegConfig {
    /// One rate per axis, or a single rate applied to every axis.
    pub gammas: Vec<f64>,
    pub lambda: f64,
}

impl Default for RegConfig {
    fn default() -> Self {
        Self {
            gammas: vec![DEFAULT_GAMMA],
            lambda: DEFAULT_LAMBDA,
        }
    }
}

impl RegConfig {
    pub fn new(gammas: Vec<f64>, lambda: f64) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::InvalidArgument("at least one decay rate required".into()));
        }
        for &g in &gammas {
            check_gamma(g)?;
        }
        check_lambda(lambda)?;
        Ok(Self { gammas, lambda })
    }

    pub fn uniform(gamma: f64, lambda: f64) -> Result<Self> {
        Self::new(vec![gamma], lambda)
    }

    pub fn gammas_for(&self, rank: usize) -> Result<Vec<f64>> {
        match self.gammas.len() {
            1 => Ok(vec![self.gammas[0]; rank]),
            n if n == rank => Ok(self.gammas.clone()),
            n => Err(Error::RankMismatch {
                expected: rank,
                actual: n,
            }),
        }
    }

    pub fn mask_for(&self, shape: &[usize]) -> Result<PenaltyMask> {
        build_penalty_mask(shape, &self.gammas_for(shape.len())?)
    }
}

fn check_lambda(lambda: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(lambda)
    } else {
        Err(Error::BadLambda(lambda))
    }
}

fn check_mask(spectrum: &Spectrum, mask: &PenaltyMask) -> Result<()> {
    if spectrum.shape() != mask.shape() {
        return Err(Error::ShapeMismatch(format!(
            "spectrum {:?} vs mask {:?}",
            spectrum.shape(),
            mask.shape()
        )));
    }
    Ok(())
}

/// `(Σ (M·Φ)², count of M·Φ ≠ 0)` for one group.
fn masked_energy(spectrum: &Spectrum, mask: &PenaltyMask) -> (f64, usize) {
    let mut energy = 0.0;
    let mut support = 0;
    for (&phi, &m) in spectrum.data().iter().zip(mask.values.data()) {
        let v = m * phi;
        if v != 0.0 {
            energy += v * v;
            support += 1;
        }
    }
    (energy, support)
}

/// Regularizer contribution of one group. A group with no nonzero masked
/// coefficient contributes 0.
pub fn group_reg_term(spectrum: &Spectrum, mask: &PenaltyMask) -> Result<f64> {
    check_mask(spectrum, mask)?;
    let (energy, support) = masked_energy(spectrum, mask);
    Ok(if support == 0 { 0.0 } else { energy / support as f64 })
}

pub fn reg_loss(
    spectra: &BTreeMap<String, Spectrum>,
    masks: &BTreeMap<String, PenaltyMask>,
) -> Result<f64> {
    let mut total = 0.0;
    for (name, spectrum) in spectra {
        let mask = masks
            .get(name)
            .ok_or_else(|| Error::MissingTensor(format!("penalty mask for `{name}`")))?;
        total += group_reg_term(spectrum, mask)?;
    }
    Ok(total)
}

/// Per-group regularizer terms for spatial weights, each spectrum recomputed.
pub fn reg_terms_for_weights(
    weights: &BTreeMap<String, Tensor>,
    cfg: &RegConfig,
) -> Result<BTreeMap<String, f64>> {
    weights
        .iter()
        .map(|(name, w)| {
            let mask = cfg.mask_for(w.shape())?;
            Ok((name.clone(), group_reg_term(&dct_full(w), &mask)?))
        })
        .collect()
}

pub fn reg_loss_for_weights(weights: &BTreeMap<String, Tensor>, cfg: &RegConfig) -> Result<f64> {
    Ok(reg_terms_for_weights(weights, cfg)?.values().sum())
}

/// Gradient of the regularizer with respect to spatial weights.
///
/// In coefficient space the derivative is `(2/K)·M²·Φ` with the support count
/// `K` held fixed; the orthonormal DCT maps it back with its inverse.
pub fn reg_gradient(
    weights: &BTreeMap<String, Tensor>,
    cfg: &RegConfig,
) -> Result<BTreeMap<String, Tensor>> {
    weights
        .iter()
        .map(|(name, w)| {
            let mask = cfg.mask_for(w.shape())?;
            let spectrum = dct_full(w);
            let (_, support) = masked_energy(&spectrum, &mask);
            let grad = if support == 0 {
                Tensor::zeros(w.shape().to_vec())?
            } else {
                let scale = 2.0 / support as f64;
                let g: Vec<f64> = spectrum
                    .data()
                    .iter()
                    .zip(mask.values.data())
                    .map(|(&phi, &m)| scale * m * m * phi)
                    .collect();
                idct_full(&Spectrum::new(Tensor::new(w.shape().to_vec(), g)?))
            };
            Ok((name.clone(), grad))
        })
        .collect()
}

/// `(1 − λ)·task + λ·reg`
pub fn total_loss(task_loss: f64, reg: f64, lambda: f64) -> Result<f64> {
    let lambda = check_lambda(lambda)?;
    Ok((1.0 - lambda) * task_loss + lambda * reg)
}

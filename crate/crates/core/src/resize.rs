//! Frequency-domain resizing and weight reconstruction.
//!
//! Each axis is handled independently: an axis that grows is zero-padded at
//! the high-frequency end, an axis that shrinks drops its highest indices.
//! No amplitude compensation is applied, so the orthonormal inverse changes
//! per-element magnitudes with size.

use crate::dct::{idct_nd, Spectrum};
use crate::error::{Error, Result};
use crate::tensor::{check_shape, Tensor};

/// Target shape for one group (layer axis first for stacked groups).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetDims(Vec<usize>);

impl TargetDims {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        check_shape(&dims)?;
        Ok(Self(dims))
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }
}

pub fn resize_spectrum(block: &Spectrum, target: &TargetDims) -> Result<Spectrum> {
    if block.rank() != target.0.len() {
        return Err(Error::RankMismatch {
            expected: block.rank(),
            actual: target.0.len(),
        });
    }
    block.resized(&target.0)
}

/// Inverse DCT of the block resized to `target`.
///
/// Axes are padded and inverted one at a time in ascending order, so fibers
/// that are still all zero are never transformed. The result is bit-identical
/// to `idct_full` of [`resize_spectrum`].
pub fn reconstruct(block: &Spectrum, target: &TargetDims) -> Result<Tensor> {
    if block.rank() != target.0.len() {
        return Err(Error::RankMismatch {
            expected: block.rank(),
            actual: target.0.len(),
        });
    }
    let clipped: Vec<usize> = block.shape().iter().zip(&target.0).map(|(&k, &n)| k.min(n)).collect();
    let mut current = block.as_tensor().resized_corner(&clipped)?;
    for (axis, &n) in target.0.iter().enumerate() {
        let mut shape = current.shape().to_vec();
        shape[axis] = n;
        current = idct_nd(&Spectrum::new(current.resized_corner(&shape)?), &[axis])?;
    }
    Ok(current)
}

/// Splits a layer-stacked tensor into one tensor per leading index.
pub fn unstack_layers(stacked: &Tensor, names: &[String]) -> Result<Vec<(String, Tensor)>> {
    if stacked.rank() < 2 {
        return Err(Error::RankMismatch {
            expected: 2,
            actual: stacked.rank(),
        });
    }
    let layers = stacked.shape()[0];
    if names.len() != layers {
        return Err(Error::ShapeMismatch(format!(
            "{} layer names for {layers} layers",
            names.len()
        )));
    }
    let shape = stacked.shape()[1..].to_vec();
    let per_layer: usize = shape.iter().product();
    Ok(names
        .iter()
        .zip(stacked.data().chunks_exact(per_layer))
        .map(|(name, chunk)| (name.clone(), Tensor::from_parts(shape.clone(), chunk.to_vec())))
        .collect())
}

//! Dense row-major tensors of rank 1 to 4.

use crate::error::{Error, Result};

pub const MAX_RANK: usize = 4;

/// Dense N-dimensional `f64` tensor, row-major (last axis fastest).
///
/// A `Tensor` is immutable once built; transforms produce new tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

pub(crate) fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() || shape.len() > MAX_RANK || shape.contains(&0) {
        return Err(Error::BadShape(shape.to_vec()));
    }
    Ok(shape.iter().product())
}

/// Row-major strides for `shape`.
pub fn strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for d in (0..shape.len().saturating_sub(1)).rev() {
        strides[d] = strides[d + 1] * shape[d + 1];
    }
    strides
}

/// Advances a multi-index in row-major order. Returns `false` after the last index.
pub(crate) fn next_index(index: &mut [usize], shape: &[usize]) -> bool {
    for d in (0..shape.len()).rev() {
        index[d] += 1;
        if index[d] < shape[d] {
            return true;
        }
        index[d] = 0;
    }
    false
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected = check_shape(&shape)?;
        if data.len() != expected {
            return Err(Error::LengthMismatch {
                shape,
                expected,
                actual: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let len = check_shape(&shape)?;
        Ok(Self {
            shape,
            data: vec![0.0; len],
        })
    }

    /// Builds a tensor by evaluating `f` at every multi-index in row-major order.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len = check_shape(&shape)?;
        let mut data = Vec::with_capacity(len);
        let mut index = vec![0; shape.len()];
        loop {
            data.push(f(&index));
            if !next_index(&mut index, &shape) {
                break;
            }
        }
        Self::new(shape, data)
    }

    /// Skips the finiteness scan. Callers guarantee the shape/length invariant.
    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn offset(&self, index: &[usize]) -> Option<usize> {
        if index.len() != self.shape.len() {
            return None;
        }
        let mut off = 0;
        for (&i, &n) in index.iter().zip(&self.shape) {
            if i >= n {
                return None;
            }
            off = off * n + i;
        }
        Some(off)
    }

    pub fn get(&self, index: &[usize]) -> Option<f64> {
        self.offset(index).map(|o| self.data[o])
    }

    /// Returns a copy with the value at `index` replaced.
    pub fn with_value(&self, index: &[usize], value: f64) -> Result<Self> {
        let off = self
            .offset(index)
            .ok_or_else(|| Error::InvalidArgument(format!("index {index:?} out of bounds")))?;
        if !value.is_finite() {
            return Err(Error::NonFinite { index: off });
        }
        let mut data = self.data.clone();
        data[off] = value;
        Ok(Self::from_parts(self.shape.clone(), data))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.shape.clone(), self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, factor: f64) -> Result<Self> {
        self.map(|v| v * factor)
    }

    /// Elementwise `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &Tensor, b: f64) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        Self::new(self.shape.clone(), data)
    }

    pub fn reshape(&self, shape: Vec<usize>) -> Result<Self> {
        let len = check_shape(&shape)?;
        if len != self.len() {
            return Err(Error::LengthMismatch {
                shape,
                expected: len,
                actual: self.len(),
            });
        }
        Ok(Self::from_parts(shape, self.data.clone()))
    }

    pub fn sum_squares(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.sum_squares().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> Option<f64> {
        (self.shape == other.shape).then(|| {
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
    }

    /// Copies the leading corner shared with `shape` into a zero tensor of `shape`.
    ///
    /// Axes that grow are zero-filled at the high end and axes that shrink lose
    /// their trailing indices. Only the overlap is touched, as whole last-axis runs.
    pub fn resized_corner(&self, shape: &[usize]) -> Result<Self> {
        if shape.len() != self.rank() {
            return Err(Error::RankMismatch {
                expected: self.rank(),
                actual: shape.len(),
            });
        }
        let len = check_shape(shape)?;
        let mut out = vec![0.0; len];
        let overlap: Vec<usize> = self.shape.iter().zip(shape).map(|(&a, &b)| a.min(b)).collect();
        let src_strides = strides(&self.shape);
        let dst_strides = strides(shape);
        let last = self.rank() - 1;
        let run = overlap[last];
        let mut index = vec![0usize; last];
        let outer = &overlap[..last];
        loop {
            let src: usize = index.iter().zip(&src_strides).map(|(i, s)| i * s).sum();
            let dst: usize = index.iter().zip(&dst_strides).map(|(i, s)| i * s).sum();
            out[dst..dst + run].copy_from_slice(&self.data[src..src + run]);
            if last == 0 || !next_index(&mut index, outer) {
                break;
            }
        }
        Ok(Self::from_parts(shape.to_vec(), out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_indexing() {
        let t = Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(t.get(&[1, 0]), Some(3.0));
        assert_eq!(t.get(&[0, 1]), Some(2.0));
        assert_eq!(t.get(&[2, 0]), None);
    }

    #[test]
    fn constructor_errors() {
        assert!(matches!(
            Tensor::new(vec![3], vec![0.0, 0.0]),
            Err(Error::LengthMismatch { expected: 3, actual: 2, .. })
        ));
        assert!(matches!(
            Tensor::new(vec![1, 1, 1], vec![f64::NAN]),
            Err(Error::NonFinite { index: 0 })
        ));
        assert!(matches!(
            Tensor::new(vec![1, 1, 1], vec![f64::INFINITY]),
            Err(Error::NonFinite { .. })
        ));
        assert!(matches!(Tensor::zeros(vec![2, 0]), Err(Error::BadShape(_))));
        assert!(matches!(Tensor::zeros(vec![]), Err(Error::BadShape(_))));
        assert!(matches!(Tensor::zeros(vec![1; 5]), Err(Error::BadShape(_))));
    }

    #[test]
    fn norms() {
        let t = Tensor::new(vec![2], vec![3.0, 4.0]).unwrap();
        assert_eq!(t.frobenius_norm(), 5.0);
        assert_eq!(Tensor::zeros(vec![3, 3]).unwrap().frobenius_norm(), 0.0);

        let t = Tensor::from_fn(vec![4, 5], |i| (i[0] as f64 * 1.7 - i[1] as f64).sin()).unwrap();
        let mut acc = 0.0;
        for r in 0..4 {
            for c in 0..5 {
                let v = t.get(&[r, c]).unwrap();
                acc += v * v;
            }
        }
        assert!((t.frobenius_norm() - acc.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn indexing_is_bijective() {
        for shape in [vec![3], vec![2, 3], vec![2, 3, 4], vec![2, 1, 3, 2]] {
            let zero = Tensor::zeros(shape.clone()).unwrap();
            let mut index = vec![0; shape.len()];
            let mut seen = std::collections::BTreeSet::new();
            loop {
                let t = zero.with_value(&index, 7.5).unwrap();
                assert_eq!(t.get(&index), Some(7.5));
                assert_eq!(t.sum_squares(), 56.25);
                assert!(seen.insert(zero.offset(&index).unwrap()));
                if !next_index(&mut index, &shape) {
                    break;
                }
            }
            assert_eq!(seen.len(), zero.len());
        }
    }

    #[test]
    fn corner_resize_pads_and_truncates() {
        let t = Tensor::from_fn(vec![2, 3], |i| (10 * i[0] + i[1]) as f64).unwrap();
        let grown = t.resized_corner(&[3, 4]).unwrap();
        assert_eq!(
            grown.data(),
            &[0.0, 1.0, 2.0, 0.0, 10.0, 11.0, 12.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
        let mixed = t.resized_corner(&[1, 5]).unwrap();
        assert_eq!(mixed.data(), &[0.0, 1.0, 2.0, 0.0, 0.0]);
        let v = Tensor::new(vec![3], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(v.resized_corner(&[2]).unwrap().data(), &[1.0, 2.0]);
        assert!(matches!(t.resized_corner(&[2]), Err(Error::RankMismatch { .. })));
    }
}

//! Weight grouping, low-frequency masking and learngene extraction.

use std::collections::BTreeMap;

use crate::dct::{dct_full, Spectrum};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const FORMAT_VERSION: u32 = 1;

/// Fraction of each axis's coefficient indices kept, in `(0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct FrequencyRatio(f64);

impl FrequencyRatio {
    pub const FULL: Self = Self(1.0);

    pub fn new(r: f64) -> Result<Self> {
        if r > 0.0 && r <= 1.0 {
            Ok(Self(r))
        } else {
            Err(Error::BadRatio(r))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Number of leading indices kept along one axis of length `extent`.
///
/// Mask indices are 0-based, so `i ≤ ⌊r·extent⌋` keeps `⌊r·extent⌋ + 1` of them,
/// clamped to `extent`. Products within 1e-9 of an integer snap to it, so
/// `r = 1/extent` behaves as the exact rational would.
pub fn keep_count(extent: usize, r: FrequencyRatio) -> usize {
    let x = r.get() * extent as f64;
    let nearest = x.round();
    let floor = if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        x.floor()
    };
    (floor as usize + 1).min(extent)
}

/// Hard low-frequency keep region: indices `[0, keep[d])` on every axis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequencyMask {
    pub keep: Vec<usize>,
}

impl FrequencyMask {
    pub fn contains(&self, index: &[usize]) -> bool {
        index.iter().zip(&self.keep).all(|(i, k)| i < k)
    }

    pub fn param_count(&self) -> usize {
        self.keep.iter().product()
    }
}

pub fn build_mask(shape: &[usize], r: FrequencyRatio) -> FrequencyMask {
    FrequencyMask {
        keep: shape.iter().map(|&n| keep_count(n, r)).collect(),
    }
}

/// Checkpoint tensors that form one weight group, in layer order.
///
/// A stacked group prepends a layer axis to its members, so `rank` is one more
/// than the member rank. An unstacked group has a single member used as is
/// (the per-layer MLP and CNN cases).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightGroupSpec {
    pub name: String,
    pub member_names: Vec<String>,
    pub rank: usize,
    pub stacked: bool,
}

impl WeightGroupSpec {
    /// A group whose members are stacked along a new leading layer axis.
    pub fn stacked(name: impl Into<String>, member_names: Vec<String>, rank: usize) -> Result<Self> {
        Self::validated(name.into(), member_names, rank, true)
    }

    /// A single tensor used without a layer axis.
    pub fn single(name: impl Into<String>, member: impl Into<String>, rank: usize) -> Result<Self> {
        Self::validated(name.into(), vec![member.into()], rank, false)
    }

    fn validated(name: String, member_names: Vec<String>, rank: usize, stacked: bool) -> Result<Self> {
        if member_names.is_empty() {
            return Err(Error::Config(format!("group `{name}` has no members")));
        }
        if !(2..=4).contains(&rank) {
            return Err(Error::Config(format!(
                "group `{name}` has rank {rank}; expected 2, 3 or 4"
            )));
        }
        Ok(Self {
            name,
            member_names,
            rank,
            stacked,
        })
    }

    pub fn member_rank(&self) -> usize {
        if self.stacked {
            self.rank - 1
        } else {
            self.rank
        }
    }
}

/// Collects the group's members into one tensor (layer axis first when stacking).
pub fn stack_group(spec: &WeightGroupSpec, tensors: &BTreeMap<String, Tensor>) -> Result<Tensor> {
    let members = spec
        .member_names
        .iter()
        .map(|n| tensors.get(n).ok_or_else(|| Error::MissingTensor(n.clone())))
        .collect::<Result<Vec<_>>>()?;
    let first = members[0];
    for (name, t) in spec.member_names.iter().zip(&members).skip(1) {
        if t.shape() != first.shape() {
            return Err(Error::ShapeMismatch(format!(
                "`{name}` has shape {:?}, expected {:?}",
                t.shape(),
                first.shape()
            )));
        }
    }
    if first.rank() != spec.member_rank() {
        return Err(Error::RankMismatch {
            expected: spec.member_rank(),
            actual: first.rank(),
        });
    }
    if !spec.stacked {
        return Ok(first.clone());
    }
    let mut shape = vec![members.len()];
    shape.extend_from_slice(first.shape());
    let mut data = Vec::with_capacity(shape.iter().product());
    for t in &members {
        data.extend_from_slice(t.data());
    }
    Ok(Tensor::from_parts(shape, data))
}

/// Low-frequency coefficients of one group plus what is needed to rebuild it.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneBlock {
    pub block: Spectrum,
    pub source_dims: Vec<usize>,
    pub ratio: FrequencyRatio,
    pub member_names: Vec<String>,
    /// Leading axis is the stacked layer axis.
    pub stacked: bool,
}

impl GeneBlock {
    pub fn rank(&self) -> usize {
        self.block.rank()
    }
}

/// Dense low-frequency corner blocks, keyed (and ordered) by group name.
#[derive(Clone, Debug, PartialEq)]
pub struct Learngene {
    pub blocks: BTreeMap<String, GeneBlock>,
    pub ratio: FrequencyRatio,
    pub format_version: u32,
}

impl Learngene {
    /// Total stored coefficients, Σ over groups of Π keep counts.
    pub fn param_count(&self) -> usize {
        self.blocks.values().map(|b| b.block.len()).sum()
    }
}

/// Truncates the full DCT spectrum of `weights` to its low-frequency corner.
pub fn extract_block(weights: &Tensor, r: FrequencyRatio) -> Result<Spectrum> {
    if !(2..=4).contains(&weights.rank()) {
        return Err(Error::Config(format!(
            "weight groups must have rank 2, 3 or 4, got {}",
            weights.rank()
        )));
    }
    let mask = build_mask(weights.shape(), r);
    dct_full(weights).resized(&mask.keep)
}

pub fn extract(groups: &[(WeightGroupSpec, Tensor)], r: FrequencyRatio) -> Result<Learngene> {
    extract_with_overrides(groups, r, &BTreeMap::new())
}

/// Like [`extract`], with a per-group ratio taking precedence over `r`.
pub fn extract_with_overrides(
    groups: &[(WeightGroupSpec, Tensor)],
    r: FrequencyRatio,
    overrides: &BTreeMap<String, FrequencyRatio>,
) -> Result<Learngene> {
    let mut blocks = BTreeMap::new();
    for (spec, weights) in groups {
        if weights.rank() != spec.rank {
            return Err(Error::RankMismatch {
                expected: spec.rank,
                actual: weights.rank(),
            });
        }
        let ratio = overrides.get(&spec.name).copied().unwrap_or(r);
        let block = extract_block(weights, ratio)?;
        let gene = GeneBlock {
            block,
            source_dims: weights.shape().to_vec(),
            ratio,
            member_names: spec.member_names.clone(),
            stacked: spec.stacked,
        };
        if blocks.insert(spec.name.clone(), gene).is_some() {
            return Err(Error::DuplicateName(spec.name.clone()));
        }
    }
    Ok(Learngene {
        blocks,
        ratio: r,
        format_version: FORMAT_VERSION,
    })
}

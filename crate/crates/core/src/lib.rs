//! Frequency-domain learngenes for neural-network weights.
//!
//! Weight matrices collected across layers are stacked into 2-D, 3-D or 4-D
//! tensors, transformed with an orthonormal DCT, and truncated to their
//! low-frequency corner. That corner (the learngene) can be zero-padded or
//! truncated to any target shape and inverted to initialize models of a
//! different depth or width. A soft high-frequency penalty and its gradient
//! are provided for regularized refinement before extraction.

pub mod analysis;
pub mod container;
pub mod dct;
pub mod error;
pub mod learngene;
mod par;
pub mod refine;
pub mod reg;
pub mod resize;
pub mod tensor;

pub use analysis::{compaction, energy_spectrum, lowfreq_similarity};
pub use container::{read_container, resolve_groups, write_container, Container, DType, GroupingConfig};
pub use dct::{dct_1d, dct_nd, dct_nd_naive, idct_1d, idct_nd, idct_nd_naive, Spectrum};
pub use error::{Error, Result};
pub use learngene::{
    build_mask, extract, stack_group, FrequencyMask, FrequencyRatio, GeneBlock, Learngene,
    WeightGroupSpec,
};
pub use refine::{refine_demo, RefineReport};
pub use reg::{build_penalty_mask, reg_gradient, reg_loss, total_loss, PenaltyMask, RegConfig};
pub use resize::{reconstruct, resize_spectrum, TargetDims};
pub use tensor::Tensor;

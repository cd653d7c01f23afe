//! Minimal dense-tensor mathematics with reverse-mode differentiation.
//!
//! Everything is computed in `f64`; checkpoints store values as `f32`
//! little-endian for a compact, platform-stable on-disk format. Tensors are
//! immutable values; recorded computations live on a [`Tape`] that is
//! confined to a single thread.

mod checkpoint;
mod ops;
mod params;
mod rng;
mod tape;
mod tensor;

pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointError};
pub use ops::{feed_forward, softmax_attention};
pub use params::{
    AttentionParams, BlockParams, ModelConfig, ParamVisitor, PredictorParams,
    ScaffoldEncoderParams, TransformerParams,
};
pub use rng::{gaussian, uniform, SeedSplitter};
pub use tape::{Gradients, Tape, Tv};
pub use tensor::Tensor;

use thiserror::Error;

/// Errors raised by tensor construction and recorded operations.
#[derive(Debug, Error)]
pub enum NumericError {
    #[error("shape mismatch: {context} (lhs {lhs:?}, rhs {rhs:?})")]
    ShapeMismatch {
        context: String,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("data length {len} does not match shape {shape:?}")]
    BadLength { len: usize, shape: Vec<usize> },
    #[error("backward requires a scalar loss, got shape {0:?}")]
    NotScalar(Vec<usize>),
    #[error("tensor is detached: no gradient path to node {0}")]
    DetachedTensor(usize),
    #[error("index {index} out of range for dimension of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
}

pub type Result<T> = std::result::Result<T, NumericError>;

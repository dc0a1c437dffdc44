//! A small CPU tensor engine: exactly the layers the classifier needs, each
//! with a forward pass, a hand-written backward pass and an Adam update.
//!
//! Activations are batched `[batch, channels, time]` tensors. Layers cache
//! what their backward pass needs during a training forward pass; calling
//! `backward` without one is an error. Inference goes through `infer`, which
//! takes `&self` so frozen parameters can be shared across threads.
//!
//! Everything is generic over [`Scalar`]: `f32` for training and inference,
//! `f64` for gradient checks.

mod adam;
mod batchnorm;
mod checkpoint;
mod conv;
mod dense;
mod gru;
pub mod init;
mod pool;
mod simple;
mod tensor;

#[cfg(test)]
pub(crate) mod fd;

use thiserror::Error;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use batchnorm::{BatchNorm1d, BnStatsMode};
pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CheckpointTensor, DType, CHECKPOINT_MAGIC};
pub use conv::{Conv1d, Padding};
pub use dense::Dense;
pub use gru::Gru;
pub use pool::MaxPool1d;
pub use simple::{cross_entropy, leaky_relu, softmax, softmax_cross_entropy, LeakyRelu, Softmax};
pub use tensor::{Param, Tensor};

#[derive(Debug, Error, PartialEq)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("backward called without a recorded training forward pass")]
    GraphNotRecorded,
    #[error("batch norm needs at least 2 samples in training mode, got {0}")]
    DegenerateBatch(usize),
    #[error("invalid layer spec: {0}")]
    InvalidSpec(String),
    #[error("invalid optimizer state: {0}")]
    InvalidOptimizer(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

pub(crate) fn shape_err(msg: impl Into<String>) -> NnError {
    NnError::ShapeMismatch(msg.into())
}

/// Floating-point element type for tensors.
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + Default
    + std::fmt::Debug
    + std::fmt::Display
    + std::iter::Sum
    + std::ops::AddAssign
    + std::ops::SubAssign
    + std::ops::MulAssign
    + Send
    + Sync
    + 'static
{
    const DTYPE: DType;

    fn from_f64_lossy(v: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(v).unwrap()
    }

    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap()
    }
}

impl Scalar for f32 {
    const DTYPE: DType = DType::F32;
}

impl Scalar for f64 {
    const DTYPE: DType = DType::F64;
}

/// Shared layer interface.
///
/// Input and output are `[batch, channels, time]` for the convolutional
/// layers and `[batch, features]` for the dense ones.
pub trait Layer<T: Scalar> {
    /// Training forward pass; records whatever `backward` needs.
    fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>, NnError>;
    /// Inference forward pass.
    fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>, NnError>;
    /// Accumulates parameter gradients and returns the input gradient.
    /// Consumes the recorded forward pass.
    fn backward(&mut self, dy: &Tensor<T>) -> Result<Tensor<T>, NnError>;
    /// Declared output shape for a given input shape.
    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError>;
    fn params(&self) -> Vec<&Param<T>> {
        Vec::new()
    }
    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        Vec::new()
    }
}

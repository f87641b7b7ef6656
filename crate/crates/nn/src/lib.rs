//! Minimal differentiable-network engine.
//!
//! All architectures in this workspace are small fixed stacks of
//! convolutions, fully-connected layers, ReLUs and a single LSTM cell, so
//! backpropagation is hand-derived per layer instead of going through a
//! general autodiff graph. The engine is generic over [`Scalar`] (`f32` for
//! training, `f64` as a shadow mode for gradient checking).

pub mod checkpoint;
pub mod gradcheck;
pub mod init;
pub mod layers;
pub mod loss;
pub mod network;
pub mod optim;
pub mod params;
pub mod scalar;
pub mod tensor;

pub use gradcheck::{grad_check, GradCheckReport};
pub use layers::{Conv2d, Linear, LstmCell, LstmState, Relu, Workspace};
pub use loss::mse_loss;
pub use network::{Layer, NetCache, Network};
pub use optim::{adam_step, sgd_step, AdamConfig, SgdConfig};
pub use params::ParamStore;
pub use scalar::Scalar;
pub use tensor::{Shape4, Tensor4};

/// Errors surfaced by the engine.
#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("numeric fault in `{layer}`: non-finite values")]
    NumericFault { layer: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NnError>;

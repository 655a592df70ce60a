//! Dense linear algebra, activations, losses, optimizers and checkpoints for
//! the small fixed-shape networks used throughout the crate.

pub mod checkpoint;
pub mod dense;
pub mod loss;
pub mod mlp;
pub mod optim;

pub use checkpoint::{Checkpoint, CheckpointMeta};
pub use dense::DenseMatrix;
pub use loss::{argmax, cross_entropy, kl_divergence, softmax, softmax_with_temperature};
pub use mlp::{mlp_forward, sigmoid, Activation, Linear, MlpParams, MlpTrace};
pub use optim::{grad_step, OptimizerKind, OptimizerState, Parameters, TrainConfig};

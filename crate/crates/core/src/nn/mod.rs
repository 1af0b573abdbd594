//! Small neural-network engine: dense, convolution, pooling and activation
//! layers, RMSE/MSE losses, Adam and momentum SGD, seeded mini-batch
//! training and a checksummed file format. Everything is `f64`.

mod layer;
mod loss;
mod network;
mod optim;
mod serialize;
mod tensor;
mod train;

use thiserror::Error;

pub use layer::{Layer, LayerSpec};
pub use loss::LossKind;
pub use network::{Gradients, Network};
pub use optim::{AdamState, Optimizer, OptimizerConfig, SgdMomentumState};
pub use serialize::{load_network, save_network, FORMAT_VERSION};
pub use tensor::Tensor;
pub use train::{evaluate, train, Metrics, TrainConfig, TrainHistory, DIVERGENCE_LIMIT};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("layer {index} ({kind}): {message}")]
    LayerShape { index: usize, kind: &'static str, message: String },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("training diverged at epoch {epoch}, batch {batch} (loss {loss})")]
    Diverged { epoch: usize, batch: usize, loss: f64 },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot load network: {0}")]
    Serialization(String),
}

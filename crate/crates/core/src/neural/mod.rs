//! Small sequential neural networks with hand-written reverse-mode
//! gradients: dense, LSTM, GRU, bidirectional LSTM, 1-D convolution, max
//! pooling, flatten and dropout layers, trained with Adam on MSE.

mod activation;
mod adam;
mod cells;
mod conv;
pub mod gradcheck;
mod layers;
mod network;
mod ops;
mod recurrent;
mod tensor;
mod train;

use thiserror::Error;

pub use activation::Activation;
pub use adam::{AdamConfig, AdamState};
pub use cells::{gru_step, lstm_step, CellWeights};
pub use conv::{conv1d_forward, maxpool1d_forward};
pub use layers::{LayerKind, LayerSpec, ParamSpec};
pub use network::{Gradients, NetworkModel};
pub use ops::{dense_forward, dropout_forward, mse_loss};
pub use recurrent::run_recurrent_layer;
pub use tensor::Tensor;
pub use train::{fit, TrainConfig, TrainHistory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NeuralError {
    #[error("shape mismatch in {context}: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        context: &'static str,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("empty sequence")]
    EmptySequence,
    #[error("invalid layer: {0}")]
    InvalidLayer(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("no training samples")]
    EmptyDataset,
    #[error("loss became non-finite at epoch {epoch}, sample {sample}")]
    NonFiniteLoss { epoch: usize, sample: usize },
    #[error("model serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, NeuralError>;

/// Training mode samples dropout masks; evaluation mode is deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Train,
    Eval,
}

//! Learned visual servoing: a from-scratch convolutional Q-network
//! over correspondence-map observations, replay memory, and a
//! deterministic Q-learning training loop.

pub mod layers;
pub mod network;
pub mod replay;
pub mod tensor;
pub mod train;

pub use network::{argmax_row, QNetwork};
pub use replay::ReplayMemory;
pub use train::{
    evaluate, evaluate_random, learning_curve_csv, td_target, train, CurvePoint, TrainConfig,
    TrainResult,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DqnError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid checkpoint: {0}")]
    BadCheckpoint(String),
    #[error("invalid training config: {0}")]
    BadConfig(String),
    #[error("training diverged at iteration {0}: loss {1}")]
    Diverged(u64, f64),
    #[error(transparent)]
    Env(#[from] crate::env::EnvError),
}

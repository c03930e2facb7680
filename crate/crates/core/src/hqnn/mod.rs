//! Hybrid quantum neural networks: a 4-qubit variational layer feeding a
//! small dense head, trained end to end with Adam.

mod data;
mod net;
mod train;

use thiserror::Error;

use crate::optim::OptimError;
use crate::statevector::SimError;

pub use data::{load_csv_dataset, make_circles, synthetic_housing, write_csv, Dataset, NormMethod, Normalization};
pub use net::{Activation, DenseLayer, Encoding, Loss, Network, QuantumLayer};
pub use train::{evaluate_metrics, train, train_on, write_history_csv, EpochRecord, History, Metric, TrainConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HqnnError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("csv row {row}: {msg}")]
    Csv { row: usize, msg: String },
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    MetricMismatch(String),
    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Optim(#[from] OptimError),
}

pub type Result<T> = std::result::Result<T, HqnnError>;

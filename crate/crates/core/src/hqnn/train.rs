//! Adam training loop, metrics and history output.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use super::net::{Activation, Loss, Network};
use super::{HqnnError, Result};
use crate::optim::Adam;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Accuracy,
    Mae,
    Mse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Minibatch size; 0 means full batch.
    pub batch_size: usize,
    pub loss: Loss,
    pub metric: Metric,
    /// Seeds the split and the per-epoch shuffles.
    pub seed: u64,
    pub train_fraction: f64,
    pub test_fraction: f64,
}

impl TrainConfig {
    /// Circles protocol: lr 1e-2, BCE, accuracy, 300/700 split.
    pub fn classification() -> Self {
        Self {
            learning_rate: 1e-2,
            epochs: 100,
            batch_size: 16,
            loss: Loss::Bce,
            metric: Metric::Accuracy,
            seed: 0,
            train_fraction: 0.3,
            test_fraction: 0.7,
        }
    }

    /// Housing protocol: lr 3e-3, MSE, MAE, 80/20 split.
    pub fn regression() -> Self {
        Self {
            learning_rate: 3e-3,
            epochs: 100,
            batch_size: 16,
            loss: Loss::Mse,
            metric: Metric::Mae,
            seed: 0,
            train_fraction: 0.8,
            test_fraction: 0.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(HqnnError::InvalidConfig(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.epochs == 0 {
            return Err(HqnnError::InvalidConfig("epochs must be at least 1".into()));
        }
        let (a, b) = (self.train_fraction, self.test_fraction);
        if !(a > 0.0 && b >= 0.0) || (a + b - 1.0).abs() > 1e-9 {
            return Err(HqnnError::InvalidConfig(format!("split fractions {a} and {b} must be non-negative and sum to 1")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_metric: f64,
}

pub type History = Vec<EpochRecord>;

/// Accuracy at threshold 0.5, MSE or MAE of the network's single output.
pub fn evaluate_metrics(net: &Network, data: &Dataset, metric: Metric) -> Result<f64> {
    if net.output_dim() != 1 {
        return Err(HqnnError::MetricMismatch(format!("metrics need a single output, network has {}", net.output_dim())));
    }
    if metric == Metric::Accuracy && net.output_activation() != Activation::Sigmoid {
        return Err(HqnnError::MetricMismatch("accuracy needs a sigmoid output".into()));
    }
    if data.is_empty() {
        return Err(HqnnError::InvalidConfig("empty dataset".into()));
    }
    let mut acc = 0.0;
    for (x, y) in data.features.iter().zip(&data.targets) {
        let p = net.forward(x)?[0];
        acc += match metric {
            Metric::Accuracy => f64::from(u8::from(p > 0.5) as f64 == *y),
            Metric::Mae => (p - y).abs(),
            Metric::Mse => (p - y).powi(2),
        };
    }
    Ok(acc / data.len() as f64)
}

/// Splits `data` by the configured fractions and trains on the first part.
pub fn train(net: &mut Network, data: &Dataset, config: &TrainConfig) -> Result<History> {
    config.validate()?;
    let n_train = ((data.len() as f64) * config.train_fraction).round() as usize;
    let (train_set, test_set) = data.split(n_train.max(1), data.len() - n_train.max(1), config.seed)?;
    train_on(net, &train_set, &test_set, config)
}

/// Adam over shuffled minibatches. After every epoch records the full
/// training loss and, when `test` is non-empty, the test metric (NaN
/// otherwise).
pub fn train_on(net: &mut Network, train: &Dataset, test: &Dataset, config: &TrainConfig) -> Result<History> {
    config.validate()?;
    if train.is_empty() {
        return Err(HqnnError::InvalidConfig("empty training set".into()));
    }
    let mut adam = Adam::new(net.num_params(), config.learning_rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let batch = if config.batch_size == 0 { train.len() } else { config.batch_size };
    let mut params = net.params();
    let mut history = Vec::with_capacity(config.epochs);
    let mut xs = Vec::with_capacity(batch);
    let mut ys = Vec::with_capacity(batch);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            xs.clear();
            ys.clear();
            for &i in chunk {
                xs.push(train.features[i].clone());
                ys.push(train.targets[i]);
            }
            let (value, grad) = net.loss_and_grad(&xs, &ys, config.loss)?;
            if !value.is_finite() {
                return Err(HqnnError::NonFiniteLoss { epoch });
            }
            adam.step(&mut params, &grad)?;
            net.set_params(&params)?;
        }
        let train_loss = net.loss(&train.features, &train.targets, config.loss)?;
        if !train_loss.is_finite() {
            return Err(HqnnError::NonFiniteLoss { epoch });
        }
        let test_metric = if test.is_empty() {
            f64::NAN
        } else {
            evaluate_metrics(net, test, config.metric)?
        };
        history.push(EpochRecord {
            epoch,
            train_loss,
            test_metric,
        });
    }
    Ok(history)
}

/// CSV with header `epoch,train_loss,test_metric`.
pub fn write_history_csv(path: impl AsRef<Path>, history: &[EpochRecord]) -> Result<()> {
    let path = path.as_ref();
    let err = |e: csv::Error| HqnnError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    for rec in history {
        w.serialize(rec).map_err(err)?;
    }
    w.flush().map_err(|e| HqnnError::Io(format!("{}: {e}", path.display())))
}

//! Mini-batch training loop.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::AdamConfig;
use super::network::{Gradients, NetworkModel};
use super::{Mode, NeuralError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Gradients within a batch are averaged before each optimiser step.
    pub batch_size: usize,
    pub learning_rate: f64,
    pub shuffle: bool,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 1,
            learning_rate: 0.001,
            shuffle: true,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(NeuralError::InvalidConfig("epochs must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(NeuralError::InvalidConfig("batch_size must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(NeuralError::InvalidConfig(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Mean training-mode loss over each epoch's samples.
    pub epoch_losses: Vec<f64>,
    pub optimizer_steps: u64,
}

/// Trains `model` in place on windowed samples. Sample order and dropout
/// masks come from one generator seeded by `seed`.
pub fn fit(
    model: &mut NetworkModel,
    inputs: &[Vec<f64>],
    targets: &[f64],
    config: &TrainConfig,
    seed: u64,
) -> Result<TrainHistory> {
    config.validate()?;
    if inputs.is_empty() {
        return Err(NeuralError::EmptyDataset);
    }
    if inputs.len() != targets.len() {
        return Err(NeuralError::ShapeMismatch {
            context: "training targets",
            expected: vec![inputs.len()],
            actual: vec![targets.len()],
        });
    }
    let samples = inputs
        .iter()
        .map(|w| model.input_from_window(w))
        .collect::<Result<Vec<_>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut history = TrainHistory::default();
    for epoch in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut acc = Gradients::zeros_like(model.params());
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let (loss, grads) =
                    model.compute_gradients(&samples[i], &[targets[i]], Mode::Train, &mut rng)?;
                if !loss.is_finite() {
                    return Err(NeuralError::NonFiniteLoss { epoch: epoch + 1, sample: i });
                }
                total += loss;
                acc.add_scaled(&grads, scale);
            }
            model.apply_gradients(&acc, &config.adam, config.learning_rate);
            history.optimizer_steps += 1;
        }
        history.epoch_losses.push(total / samples.len() as f64);
    }
    Ok(history)
}

//! Adam optimiser with bias-corrected moment estimates.

use serde::{Deserialize, Serialize};

use super::network::Gradients;
use super::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates, one buffer per parameter tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl AdamState {
    pub fn new(params: &[Vec<Tensor>]) -> Self {
        let zeros: Vec<Vec<f64>> = params.iter().flatten().map(|t| vec![0.0; t.len()]).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One Adam update of `params` in place.
pub(crate) fn adam_step(
    params: &mut [Vec<Tensor>],
    grads: &Gradients,
    state: &mut AdamState,
    config: &AdamConfig,
    learning_rate: f64,
) {
    state.step += 1;
    let t = state.step as f64;
    let c1 = 1.0 - config.beta1.powf(t);
    let c2 = 1.0 - config.beta2.powf(t);
    let tensors = params.iter_mut().flatten().zip(grads.0.iter().flatten());
    for ((p, g), (m, v)) in tensors.zip(state.m.iter_mut().zip(state.v.iter_mut())) {
        for (((w, &g), m), v) in p.data_mut().iter_mut().zip(g.data()).zip(m).zip(v) {
            *m = config.beta1 * *m + (1.0 - config.beta1) * g;
            *v = config.beta2 * *v + (1.0 - config.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *w -= learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
        }
    }
}

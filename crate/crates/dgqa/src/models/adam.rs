//! Adam with bias correction and decoupled weight decay.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Optimizer and training hyperparameters. The default learning rate suits
/// the from-scratch heads in this crate; `finetune_preset` carries the much
/// smaller rate appropriate for fine-tuning a large pretrained backbone.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            weight_decay: 5e-4,
            batch_size: 32,
            epochs: 15,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn finetune_preset() -> Self {
        TrainConfig {
            learning_rate: 2e-5,
            ..Default::default()
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        TrainConfig { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 {
            return Err(Error::validation("learning_rate must be > 0"));
        }
        if self.batch_size == 0 {
            return Err(Error::validation("batch_size must be >= 1"));
        }
        if self.epochs == 0 {
            return Err(Error::validation("epochs must be >= 1"));
        }
        Ok(())
    }
}

/// First/second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(param_count: usize) -> Self {
        AdamState {
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            step: 0,
        }
    }
}

/// One optimizer step. Decoupled weight decay shrinks the parameters before
/// the bias-corrected Adam delta is applied.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    config: &TrainConfig,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::DimensionMismatch(format!(
            "params {} / grads {} / state {}",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - config.beta1.powi(t);
    let bc2 = 1.0 - config.beta2.powi(t);
    let decay = 1.0 - config.learning_rate * config.weight_decay;
    for i in 0..params.len() {
        params[i] *= decay;
        state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * grads[i];
        state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * grads[i] * grads[i];
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
    }
    Ok(())
}

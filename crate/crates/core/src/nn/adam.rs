use serde::{Deserialize, Serialize};

use super::network::Gradients;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Learning-rate multiplier applied once per epoch.
    pub decay_factor: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            decay_factor: 0.99,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!("learning rate {} must be > 0", self.learning_rate)));
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return Err(Error::Config(format!("decay factor {} outside (0, 1]", self.decay_factor)));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("adam betas must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Adam moments and schedule for one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step: u64,
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub learning_rate: f64,
    pub decay_factor: f64,
}

impl AdamState {
    pub fn new(param_lens: &[usize], config: AdamConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            step: 0,
            first_moment: param_lens.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: param_lens.iter().map(|&n| vec![0.0; n]).collect(),
            beta1: config.beta1,
            beta2: config.beta2,
            epsilon: config.epsilon,
            learning_rate: config.learning_rate,
            decay_factor: config.decay_factor,
        })
    }

    /// Applies the per-epoch learning-rate decay.
    pub fn end_epoch(&mut self) {
        self.learning_rate *= self.decay_factor;
    }
}

/// One bias-corrected Adam update. Nothing is modified when any gradient
/// is non-finite.
pub fn adam_step(params: &mut [&mut [f64]], grads: &Gradients, state: &mut AdamState) -> Result<()> {
    let g = grads.tensors();
    if params.len() != g.len() || params.len() != state.first_moment.len() {
        return Err(Error::Dimension(format!(
            "{} parameter tensors, {} gradients, {} moment tensors",
            params.len(),
            g.len(),
            state.first_moment.len()
        )));
    }
    for (i, (p, gi)) in params.iter().zip(g).enumerate() {
        if p.len() != gi.len() || p.len() != state.first_moment[i].len() {
            return Err(Error::Dimension(format!("parameter tensor {i} is not congruent with its gradient")));
        }
    }
    if !grads.is_finite() {
        return Err(Error::Training {
            epoch: 0,
            batch: 0,
            reason: "non-finite gradient".into(),
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let lr = state.learning_rate;
    let eps = state.epsilon;
    for (((p, gi), m), v) in params
        .iter_mut()
        .zip(g)
        .zip(&mut state.first_moment)
        .zip(&mut state.second_moment)
    {
        for (((w, &gw), mw), vw) in p.iter_mut().zip(gi).zip(m.iter_mut()).zip(v.iter_mut()) {
            *mw = b1 * *mw + (1.0 - b1) * gw;
            *vw = b2 * *vw + (1.0 - b2) * gw * gw;
            let m_hat = *mw / c1;
            let v_hat = *vw / c2;
            *w -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

use serde::{Deserialize, Serialize};

use crate::data::CHANNELS;
use crate::error::{Error, Result};
use crate::nn::{Activation, AdamConfig, LayerSpec};

/// Hyperparameters of the autoencoder and its training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PIConvAEConfig {
    pub alpha_d: f64,
    pub alpha_phy: f64,
    pub window: usize,
    pub features: usize,
    pub latent_per_feature: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub decay: f64,
    pub dropout: f64,
    pub leaky_slope: f64,
    pub batch_size: usize,
    /// Visit windows in a seeded random order each epoch.
    pub shuffle: bool,
    pub seed: u64,
}

impl Default for PIConvAEConfig {
    fn default() -> Self {
        Self {
            alpha_d: 1.0,
            alpha_phy: 1.0,
            window: 100,
            features: CHANNELS,
            latent_per_feature: 20,
            epochs: 800,
            learning_rate: 1e-3,
            decay: 0.99,
            dropout: 0.2,
            leaky_slope: 0.2,
            batch_size: 32,
            shuffle: true,
            seed: 0,
        }
    }
}

/// Encoder and decoder conv stages as `(kernels, kernel_size)`.
pub const ENCODER_CONVS: [(usize, usize); 2] = [(64, 5), (32, 3)];
pub const DECODER_CONVS: [(usize, usize); 2] = [(32, 3), (64, 5)];

impl PIConvAEConfig {
    pub fn bottleneck(&self) -> usize {
        self.features * self.latent_per_feature
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_d >= 0.0 && self.alpha_phy >= 0.0) || self.alpha_d + self.alpha_phy == 0.0 {
            return Err(Error::Config(format!(
                "loss weights alpha_d={} alpha_phy={} must be >= 0 and not both zero",
                self.alpha_d, self.alpha_phy
            )));
        }
        if self.features != CHANNELS {
            return Err(Error::Config(format!("the model expects {CHANNELS} features, got {}", self.features)));
        }
        let widest = ENCODER_CONVS.iter().map(|c| c.1).max().unwrap_or(1);
        if self.window < widest || self.latent_per_feature < widest {
            return Err(Error::Config(format!(
                "window ({}) and latent_per_feature ({}) must be at least the kernel size {widest}",
                self.window, self.latent_per_feature
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        self.adam().validate()
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            decay_factor: self.decay,
            ..AdamConfig::default()
        }
    }

    /// The layer stack: two conv encoder stages, dense bottleneck, reshape
    /// to `latent_per_feature × features`, two conv decoder stages, and a
    /// dense tanh output reshaped back to `window × features`.
    pub fn architecture(&self) -> Vec<LayerSpec> {
        let leaky = LayerSpec::Activation {
            activation: Activation::LeakyRelu { slope: self.leaky_slope },
        };
        let dropout = LayerSpec::Dropout { rate: self.dropout };
        let mut layers = Vec::new();
        for &(kernels, kernel_size) in &ENCODER_CONVS {
            layers.push(LayerSpec::Conv1d { kernels, kernel_size });
            layers.push(leaky.clone());
            layers.push(dropout.clone());
        }
        let enc_out = ENCODER_CONVS[ENCODER_CONVS.len() - 1].0;
        layers.push(LayerSpec::Reshape { shape: vec![self.window * enc_out] });
        layers.push(LayerSpec::Dense { units: self.bottleneck() });
        layers.push(LayerSpec::Reshape {
            shape: vec![self.latent_per_feature, self.features],
        });
        for &(kernels, kernel_size) in &DECODER_CONVS {
            layers.push(LayerSpec::Conv1d { kernels, kernel_size });
            layers.push(leaky.clone());
            layers.push(dropout.clone());
        }
        let dec_out = DECODER_CONVS[DECODER_CONVS.len() - 1].0;
        layers.push(LayerSpec::Reshape {
            shape: vec![self.latent_per_feature * dec_out],
        });
        layers.push(LayerSpec::Dense {
            units: self.window * self.features,
        });
        layers.push(LayerSpec::Activation { activation: Activation::Tanh });
        layers.push(LayerSpec::Reshape {
            shape: vec![self.window, self.features],
        });
        layers
    }
}

//! The convolutional autoencoder, its losses and training loop.

mod config;
mod loss;
mod train;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub use config::{PIConvAEConfig, DECODER_CONVS, ENCODER_CONVS};
pub use loss::{
    loss_data, loss_phy_p, loss_phy_q, loss_total, BatchObjective, LossBreakdown, LossWeights,
    PhysicsInformedObjective, ReconstructionLoss,
};
pub use train::{evaluate_loss, train, train_with, train_with_objective, write_loss_log, EpochRecord, TrainOptions};

use crate::data::{NormalizationParams, WindowedDataset};
use crate::error::{Error, Result};
use crate::nn::{LayerSpec, Network};
use crate::tensor::Tensor;

const CHECKPOINT_FORMAT: &str = "piconvae-checkpoint";
const CHECKPOINT_VERSION: u32 = 1;
const INFER_BATCH: usize = 64;

/// A trained autoencoder together with the normalization it was fit under.
#[derive(Debug, Clone)]
pub struct PIConvAEModel {
    network: Network,
    normalization: NormalizationParams,
    config: PIConvAEConfig,
    history: Vec<EpochRecord>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    input_shape: Vec<usize>,
    architecture: Vec<LayerSpec>,
    parameters: Vec<Tensor>,
    normalization: NormalizationParams,
    seed: u64,
    config: PIConvAEConfig,
    #[serde(default)]
    loss_history: Vec<EpochRecord>,
}

impl PIConvAEModel {
    pub fn from_network(
        network: Network,
        normalization: NormalizationParams,
        config: PIConvAEConfig,
        history: Vec<EpochRecord>,
    ) -> Self {
        Self {
            network,
            normalization,
            config,
            history,
        }
    }

    /// Untrained model with the initial weights for `config.seed`.
    pub fn initial(config: &PIConvAEConfig, normalization: NormalizationParams) -> Result<Self> {
        Ok(Self::from_network(config.build_network()?, normalization, config.clone(), Vec::new()))
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn normalization(&self) -> &NormalizationParams {
        &self.normalization
    }

    pub fn config(&self) -> &PIConvAEConfig {
        &self.config
    }

    pub fn history(&self) -> &[EpochRecord] {
        &self.history
    }

    /// Inference-mode reconstruction of one `window × 6` normalized window.
    pub fn reconstruct(&self, window: &Tensor) -> Result<Tensor> {
        if window.shape() != self.network.input_shape() {
            return Err(Error::Dimension(format!(
                "window shape {:?}, model expects {:?}",
                window.shape(),
                self.network.input_shape()
            )));
        }
        let out = self.network.infer(window.values(), 1)?;
        Tensor::new(self.network.output_shape().to_vec(), out)
    }

    /// Reconstructs `batch` contiguous windows.
    pub fn reconstruct_batch(&self, windows: &[f64], batch: usize) -> Result<Vec<f64>> {
        self.network.infer(windows, batch)
    }

    /// Reconstructions of every window of `dataset`, concatenated in order.
    pub fn reconstruct_dataset(&self, dataset: &WindowedDataset) -> Result<Vec<f64>> {
        let indices: Vec<usize> = (0..dataset.len()).collect();
        let mut out = Vec::with_capacity(dataset.len() * self.network.output_len());
        for chunk in indices.chunks(INFER_BATCH) {
            let x = dataset.gather(chunk);
            out.extend(self.network.infer(&x, chunk.len())?);
        }
        Ok(out)
    }

    pub fn save<W: Write>(&self, writer: W) -> Result<()> {
        let ck = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            input_shape: self.network.input_shape().to_vec(),
            architecture: self.network.specs(),
            parameters: self.network.param_tensors(),
            normalization: self.normalization,
            seed: self.network.seed(),
            config: self.config.clone(),
            loss_history: self.history.clone(),
        };
        serde_json::to_writer(writer, &ck)?;
        Ok(())
    }

    pub fn load<R: Read>(reader: R) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_reader(reader)?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(Error::Schema(format!(
                "unsupported checkpoint {} v{}",
                ck.format, ck.version
            )));
        }
        let normalization = NormalizationParams::new(ck.normalization.min, ck.normalization.max)?;
        let network = Network::from_parts(ck.input_shape, &ck.architecture, ck.parameters, ck.seed)?;
        Ok(Self::from_network(network, normalization, ck.config, ck.loss_history))
    }
}

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::PIConvAEConfig;
use super::loss::{BatchObjective, LossBreakdown, LossWeights, PhysicsInformedObjective};
use super::PIConvAEModel;
use crate::data::WindowedDataset;
use crate::error::{Error, Result};
use crate::nn::{adam_step, AdamState, Mode, Network};

const DROPOUT_STREAM: u64 = 1;
const SHUFFLE_STREAM: u64 = 2;

/// Averages for one epoch, in training mode (dropout active).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    #[serde(flatten)]
    pub loss: LossBreakdown,
    /// Learning rate used during this epoch.
    pub lr: f64,
    /// Inference-mode loss on the validation windows, when supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<LossBreakdown>,
}

/// Optional extras for a training run.
#[derive(Default)]
pub struct TrainOptions<'a> {
    pub validation: Option<&'a WindowedDataset>,
    pub observer: Option<&'a mut dyn FnMut(&EpochRecord)>,
}

impl PIConvAEConfig {
    pub fn weights(&self) -> LossWeights {
        LossWeights {
            alpha_d: self.alpha_d,
            alpha_phy: self.alpha_phy,
        }
    }

    pub fn input_shape(&self) -> Vec<usize> {
        vec![self.window, self.features]
    }

    /// Freshly initialised network for this configuration.
    pub fn build_network(&self) -> Result<Network> {
        self.validate()?;
        Network::new(self.input_shape(), &self.architecture(), self.seed)
    }
}

fn check_dataset(dataset: &WindowedDataset, config: &PIConvAEConfig) -> Result<()> {
    if dataset.window_size() != config.window {
        return Err(Error::Config(format!(
            "dataset windows have {} samples, model expects {}",
            dataset.window_size(),
            config.window
        )));
    }
    if dataset.is_empty() {
        return Err(Error::Data("no training windows".into()));
    }
    Ok(())
}

/// Trains with the composite physics-informed loss.
pub fn train(dataset: &WindowedDataset, config: &PIConvAEConfig) -> Result<PIConvAEModel> {
    train_with(dataset, config, TrainOptions::default())
}

pub fn train_with(dataset: &WindowedDataset, config: &PIConvAEConfig, options: TrainOptions<'_>) -> Result<PIConvAEModel> {
    let objective = PhysicsInformedObjective { weights: config.weights() };
    train_with_objective(dataset, config, &objective, options)
}

/// Mean loss of the network over a dataset, with dropout disabled.
pub fn evaluate_loss<O: BatchObjective>(
    network: &Network,
    dataset: &WindowedDataset,
    objective: &O,
    batch_size: usize,
) -> Result<LossBreakdown> {
    let indices: Vec<usize> = (0..dataset.len()).collect();
    let mut acc = LossBreakdown::default();
    for chunk in indices.chunks(batch_size.max(1)) {
        let x = dataset.gather(chunk);
        let out = network.infer(&x, chunk.len())?;
        let (b, _) = objective.evaluate(&x, &out, dataset.params())?;
        accumulate(&mut acc, &b, chunk.len() as f64);
    }
    Ok(scaled(acc, 1.0 / dataset.len() as f64))
}

fn accumulate(acc: &mut LossBreakdown, b: &LossBreakdown, w: f64) {
    acc.data += b.data * w;
    acc.phy_p += b.phy_p * w;
    acc.phy_q += b.phy_q * w;
    acc.total += b.total * w;
}

fn scaled(b: LossBreakdown, w: f64) -> LossBreakdown {
    LossBreakdown {
        data: b.data * w,
        phy_p: b.phy_p * w,
        phy_q: b.phy_q * w,
        total: b.total * w,
    }
}

/// Deterministic mini-batch Adam training against an arbitrary objective.
/// Initial weights, dropout masks and the per-epoch window order all derive
/// from `config.seed`.
pub fn train_with_objective<O: BatchObjective>(
    dataset: &WindowedDataset,
    config: &PIConvAEConfig,
    objective: &O,
    mut options: TrainOptions<'_>,
) -> Result<PIConvAEModel> {
    config.validate()?;
    check_dataset(dataset, config)?;
    if let Some(v) = options.validation {
        check_dataset(v, config)?;
    }
    let mut network = config.build_network()?;
    let lens: Vec<usize> = network.params().iter().map(|p| p.len()).collect();
    let mut adam = AdamState::new(&lens, config.adam())?;
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed);
    dropout_rng.set_stream(DROPOUT_STREAM);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(SHUFFLE_STREAM);

    let norm = *dataset.params();
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut shuffle_rng);
        }
        let lr = adam.learning_rate;
        let mut acc = LossBreakdown::default();
        for (batch, chunk) in order.chunks(config.batch_size).enumerate() {
            let fail = |reason: String| Error::Training { epoch, batch, reason };
            let x = dataset.gather(chunk);
            let out = network.forward(&x, chunk.len(), Mode::Training(&mut dropout_rng))?;
            let (b, grad) = objective.evaluate(&x, &out, &norm)?;
            if !b.is_finite() {
                return Err(fail(format!("non-finite loss {:?}", b)));
            }
            let grads = network.backward(&grad)?;
            let mut params = network.params_mut();
            adam_step(&mut params, &grads, &mut adam).map_err(|e| match e {
                Error::Training { reason, .. } => fail(reason),
                other => other,
            })?;
            accumulate(&mut acc, &b, chunk.len() as f64);
        }
        network.clear_trace();
        let mean = scaled(acc, 1.0 / dataset.len() as f64);
        let loss = LossBreakdown::assemble(mean.data, mean.phy_p, mean.phy_q, config.weights());
        let validation = match options.validation {
            Some(v) => Some(evaluate_loss(&network, v, objective, 64)?),
            None => None,
        };
        let record = EpochRecord {
            epoch,
            loss,
            lr,
            validation,
        };
        if let Some(obs) = options.observer.as_deref_mut() {
            obs(&record);
        }
        history.push(record);
        adam.end_epoch();
    }
    Ok(PIConvAEModel::from_network(network, norm, config.clone(), history))
}

/// `epoch,L_data,L_phy_P,L_phy_Q,L_total,lr`, one row per epoch.
pub fn write_loss_log<W: Write>(history: &[EpochRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["epoch", "L_data", "L_phy_P", "L_phy_Q", "L_total", "lr"])?;
    for r in history {
        w.write_record(&[
            r.epoch.to_string(),
            r.loss.data.to_string(),
            r.loss.phy_p.to_string(),
            r.loss.phy_q.to_string(),
            r.loss.total.to_string(),
            r.lr.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

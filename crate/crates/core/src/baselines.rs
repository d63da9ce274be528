//! Purely data-driven comparison detectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{make_windows, normalize, MeasurementSeries, WindowedDataset};
use crate::detection::{aggregate_to_timestamps, AnomalyScoreSeries, ScoringConfig};
use crate::error::{Error, Result};
use crate::model::{train_with, PIConvAEConfig, PIConvAEModel, TrainOptions};

pub const DEFAULT_K: usize = 8;
pub const DEFAULT_MAX_ITERS: usize = 100;

/// Autoencoder with the physics weight removed and every other setting kept.
pub fn convae_baseline(dataset: &WindowedDataset, config: &PIConvAEConfig) -> Result<PIConvAEModel> {
    convae_baseline_with(dataset, config, TrainOptions::default())
}

pub fn convae_baseline_with(dataset: &WindowedDataset, config: &PIConvAEConfig, options: TrainOptions<'_>) -> Result<PIConvAEModel> {
    let config = PIConvAEConfig {
        alpha_phy: 0.0,
        ..config.clone()
    };
    train_with(dataset, &config, options)
}

/// Centroids over flattened windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    pub k: usize,
    pub dim: usize,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia after each Lloyd assignment step.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
    /// Window length the model was fit on (`dim / 6`).
    pub window: usize,
    pub normalization: crate::data::NormalizationParams,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(centroids: &[Vec<f64>], x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(centroid, x);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init(dataset: &WindowedDataset, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = dataset.len();
    let mut centroids = vec![dataset.window(rng.random_range(0..n)).to_vec()];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(&centroids[0], dataset.window(i))).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random_range(0.0..total);
            let mut idx = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if u < d {
                    idx = i;
                    break;
                }
                u -= d;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        let c = dataset.window(pick).to_vec();
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(&c, dataset.window(i)));
        }
        centroids.push(c);
    }
    centroids
}

/// Seeded k-means++ initialisation followed by Lloyd iterations until the
/// assignment stops changing or `max_iters` is reached.
pub fn kmeans_fit(dataset: &WindowedDataset, k: usize, seed: u64, max_iters: usize) -> Result<KMeansModel> {
    let n = dataset.len();
    if k == 0 || k > n {
        return Err(Error::Config(format!("k = {k} with {n} windows")));
    }
    let dim = dataset.window(0).len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(dataset, k, &mut rng);
    let mut assign = vec![usize::MAX; n];
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let mut changed = false;
        let mut inertia = 0.0;
        for (i, a) in assign.iter_mut().enumerate() {
            let (c, d) = nearest(&centroids, dataset.window(i));
            inertia += d;
            if *a != c {
                *a = c;
                changed = true;
            }
        }
        history.push(inertia);
        if !changed || iterations >= max_iters {
            break;
        }
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, &a) in assign.iter().enumerate() {
            counts[a] += 1;
            sums[a].iter_mut().zip(dataset.window(i)).for_each(|(s, x)| *s += x);
        }
        for c in 0..k {
            // an emptied cluster keeps its previous centroid
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                centroids[c] = sums[c].iter().map(|s| s * inv).collect();
            }
        }
    }
    Ok(KMeansModel {
        k,
        dim,
        inertia: *history.last().unwrap_or(&0.0),
        inertia_history: history,
        iterations,
        centroids,
        window: dataset.window_size(),
        normalization: *dataset.params(),
    })
}

/// Euclidean distance from a flattened window to its nearest centroid.
pub fn kmeans_score(model: &KMeansModel, window: &[f64]) -> Result<f64> {
    if window.len() != model.dim {
        return Err(Error::Dimension(format!(
            "window of {} values, model expects {}",
            window.len(),
            model.dim
        )));
    }
    Ok(nearest(&model.centroids, window).1.sqrt())
}

/// Per-timestamp score: each window's distance spread over the samples it
/// covers, then aggregated like reconstruction scores.
pub fn kmeans_score_series(model: &KMeansModel, series: &MeasurementSeries, config: &ScoringConfig) -> Result<AnomalyScoreSeries> {
    let normalized = normalize(series, &model.normalization);
    let dataset = make_windows(&normalized, model.window, config.step)?;
    let mut per_window = Vec::with_capacity(dataset.len() * model.window);
    for k in 0..dataset.len() {
        let s = kmeans_score(model, dataset.window(k))?;
        per_window.extend(std::iter::repeat_n(s, model.window));
    }
    let a_r = aggregate_to_timestamps(&per_window, dataset.origins(), model.window, series.len(), config.aggregation)?;
    AnomalyScoreSeries::assemble(series.records.iter().map(|r| r.timestamp).collect(), a_r, None)
}

//! End-to-end synthetic experiments: generate, split, attack, train, score,
//! threshold and tabulate.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::attacks::{build_attack_suite, LabeledSeries, SuiteConfig};
use crate::baselines::{convae_baseline_with, kmeans_fit, kmeans_score_series, DEFAULT_K, DEFAULT_MAX_ITERS};
use crate::data::{
    fit_normalizer, generate_synthetic, make_windows, normalize, split_series, MeasurementSeries, NormalizationParams,
    SplitRatios, SyntheticConfig, WindowedDataset,
};
use crate::detection::{detect, score_series, AnomalyScoreSeries, DetectionReport, ScoreMode, ScoringConfig};
use crate::error::{Error, Result};
use crate::model::{train_with, PIConvAEConfig, PIConvAEModel, TrainOptions};

/// Stage names used to derive independent seeds from one top-level seed.
pub mod stage {
    pub const DATA: &str = "data";
    pub const ATTACKS: &str = "attacks";
    pub const MODEL: &str = "model";
    pub const KMEANS: &str = "kmeans";
}

/// Deterministic per-stage seed (FNV-1a of the stage name mixed into the
/// top-level seed, finished with SplitMix64).
pub fn derive_seed(seed: u64, stage: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stage.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    Piconvae,
    Convae,
    Kmeans,
}

impl DetectorKind {
    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Piconvae => "piconvae",
            DetectorKind::Convae => "convae",
            DetectorKind::Kmeans => "kmeans",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub length: usize,
    pub noise_std: f64,
    pub split: SplitRatios,
    /// Leading fraction of the training split used for fitting.
    pub train_ratio: f64,
    pub model: PIConvAEConfig,
    pub scoring: ScoringConfig,
    /// Attacks on the test split; `None` uses the default seven-attack suite.
    pub suite: Option<SuiteConfig>,
    pub kmeans_k: usize,
    pub kmeans_max_iters: usize,
    pub detectors: Vec<DetectorKind>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            length: 10_080,
            noise_std: 0.001,
            split: SplitRatios::default(),
            train_ratio: 1.0,
            model: PIConvAEConfig::default(),
            scoring: ScoringConfig::default(),
            suite: None,
            kmeans_k: DEFAULT_K,
            kmeans_max_iters: DEFAULT_MAX_ITERS,
            detectors: vec![DetectorKind::Piconvae],
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.split.validate()?;
        if !(self.train_ratio > 0.0 && self.train_ratio <= 1.0) {
            return Err(Error::Config(format!("train_ratio {} outside (0, 1]", self.train_ratio)));
        }
        if self.detectors.is_empty() {
            return Err(Error::Config("no detectors selected".into()));
        }
        self.model.validate()
    }

    /// Model configuration with the seed derived for training.
    pub fn model_config(&self) -> PIConvAEConfig {
        PIConvAEConfig {
            seed: derive_seed(self.seed, stage::MODEL),
            ..self.model.clone()
        }
    }
}

/// Leading `ratio` fraction of a series (at least one sample).
pub fn leading_fraction(series: &MeasurementSeries, ratio: f64) -> MeasurementSeries {
    let n = ((series.len() as f64 * ratio).round() as usize).clamp(1, series.len().max(1));
    series.slice(0..n.min(series.len()))
}

/// Everything the detectors consume.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: MeasurementSeries,
    pub validation: MeasurementSeries,
    pub test: LabeledSeries,
    pub normalization: NormalizationParams,
    pub train_windows: WindowedDataset,
    pub validation_windows: WindowedDataset,
}

/// Windows and normalization for an already split, already attacked dataset.
pub fn prepare(
    train: MeasurementSeries,
    validation: MeasurementSeries,
    test: LabeledSeries,
    window: usize,
) -> Result<PreparedData> {
    let normalization = fit_normalizer(&train, 0..train.len())?;
    let train_windows = make_windows(&normalize(&train, &normalization), window, 1)?;
    let validation_windows = make_windows(&normalize(&validation, &normalization), window, 1)?;
    Ok(PreparedData {
        train,
        validation,
        test,
        normalization,
        train_windows,
        validation_windows,
    })
}

pub fn prepare_synthetic(config: &ExperimentConfig) -> Result<PreparedData> {
    config.validate()?;
    let synth = SyntheticConfig::new(config.length, derive_seed(config.seed, stage::DATA), config.noise_std);
    let series = generate_synthetic(&synth)?;
    let split = split_series(&series, &config.split)?;
    let suite = match &config.suite {
        Some(s) => s.clone(),
        None => SuiteConfig::default_for(split.test.len())?,
    };
    let test = build_attack_suite(&split.test, &suite, derive_seed(config.seed, stage::ATTACKS))?;
    let train = leading_fraction(&split.train, config.train_ratio);
    prepare(train, split.validation, test, config.model.window)
}

/// A trained detector, able to score any series in physical units.
#[derive(Debug, Clone)]
pub enum Detector {
    Autoencoder { model: PIConvAEModel, mode: ScoreMode },
    Kmeans(crate::baselines::KMeansModel),
}

impl Detector {
    pub fn score(&self, series: &MeasurementSeries, scoring: &ScoringConfig) -> Result<AnomalyScoreSeries> {
        match self {
            Detector::Autoencoder { model, mode } => score_series(model, series, &ScoringConfig { mode: *mode, ..*scoring }),
            Detector::Kmeans(m) => kmeans_score_series(m, series, scoring),
        }
    }

    pub fn model(&self) -> Option<&PIConvAEModel> {
        match self {
            Detector::Autoencoder { model, .. } => Some(model),
            Detector::Kmeans(_) => None,
        }
    }
}

/// Physics-informed models use the combined score; data-driven baselines
/// use their own residual only.
pub fn fit_detector(
    kind: DetectorKind,
    data: &PreparedData,
    config: &ExperimentConfig,
    options: TrainOptions<'_>,
) -> Result<Detector> {
    let model_config = config.model_config();
    Ok(match kind {
        DetectorKind::Piconvae => Detector::Autoencoder {
            model: train_with(&data.train_windows, &model_config, options)?,
            mode: config.scoring.mode,
        },
        DetectorKind::Convae => Detector::Autoencoder {
            model: convae_baseline_with(&data.train_windows, &model_config, options)?,
            mode: ScoreMode::ReconstructionOnly,
        },
        DetectorKind::Kmeans => Detector::Kmeans(kmeans_fit(
            &data.train_windows,
            config.kmeans_k,
            derive_seed(config.seed, stage::KMEANS),
            config.kmeans_max_iters,
        )?),
    })
}

#[derive(Debug, Clone)]
pub struct DetectorRun {
    pub kind: DetectorKind,
    pub detector: Detector,
    pub reference: AnomalyScoreSeries,
    pub scores: AnomalyScoreSeries,
    pub report: DetectionReport,
}

/// Scores the clean validation split and the attacked test split, and
/// thresholds the latter against the former.
pub fn evaluate_detector(kind: DetectorKind, detector: Detector, data: &PreparedData, scoring: &ScoringConfig) -> Result<DetectorRun> {
    let reference = detector.score(&data.validation, scoring)?;
    let scores = detector.score(&data.test.series, scoring)?;
    let report = detect(&reference, &scores, &data.test.labels, scoring.sigma)?;
    Ok(DetectorRun {
        kind,
        detector,
        reference,
        scores,
        report,
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<DetectorRun>> {
    let data = prepare_synthetic(config)?;
    config
        .detectors
        .iter()
        .map(|&kind| {
            let detector = fit_detector(kind, &data, config, TrainOptions::default())?;
            evaluate_detector(kind, detector, &data, &config.scoring)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub detector: String,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// One row per report, sorted by F1 descending (ties keep input order).
pub fn comparison_table(reports: &[(String, DetectionReport)]) -> Vec<ComparisonRow> {
    let mut rows: Vec<ComparisonRow> = reports
        .iter()
        .map(|(name, r)| ComparisonRow {
            detector: name.clone(),
            tp: r.confusion.tp,
            fp: r.confusion.fp,
            tn: r.confusion.tn,
            fn_: r.confusion.fn_,
            accuracy: r.metrics.accuracy,
            precision: r.metrics.precision,
            recall: r.metrics.recall,
            f1: r.metrics.f1,
        })
        .collect();
    rows.sort_by(|a, b| b.f1.total_cmp(&a.f1));
    rows
}

pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_comparison_csv<R: std::io::Read>(reader: R) -> Result<Vec<ComparisonRow>> {
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

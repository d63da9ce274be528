//! Anomaly scores, three-sigma thresholding and confusion metrics.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::{normalize, make_windows, Channel, MeasurementRecord, MeasurementSeries, CHANNELS};
use crate::error::{Error, Result};
use crate::model::PIConvAEModel;

pub const DEFAULT_EPSILON_GUARD: f64 = 1e-6;
pub const DEFAULT_SIGMA: f64 = 3.0;

/// How per-window scores of one timestamp are reduced.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Mean,
    Max,
    /// Best-case window: a timestamp scores high only if every window
    /// covering it reconstructs it poorly. Keeps one attacked sample from
    /// raising the scores of every clean sample that shares a window with it.
    #[default]
    Min,
}

/// `|x(V,k) − x̂(V,k)|` for each row of a `rows × 6` window pair.
pub fn score_reconstruction(x: &[f64], x_hat: &[f64], channel: Channel) -> Result<Vec<f64>> {
    if x.len() != x_hat.len() || x.len() % CHANNELS != 0 {
        return Err(Error::Dimension(format!(
            "window of {} values against reconstruction of {}",
            x.len(),
            x_hat.len()
        )));
    }
    let c = channel.index();
    Ok(x.chunks_exact(CHANNELS)
        .zip(x_hat.chunks_exact(CHANNELS))
        .map(|(a, b)| (a[c] - b[c]).abs())
        .collect())
}

/// Physics scores of one record, and whether either denominator hit the guard.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsScore {
    pub a_p: f64,
    pub a_q: f64,
    pub guarded: bool,
}

fn guard(d: f64, eps: f64) -> (f64, bool) {
    if d.abs() >= eps {
        (d, false)
    } else if d < 0.0 {
        (-eps, true)
    } else {
        (eps, true)
    }
}

/// `a_p = |V − P/(I·cos(θ−δ))|`, `a_q = |V − Q/(I·sin(θ−δ))|` on physical values.
pub fn score_physics(record: &MeasurementRecord, epsilon_guard: f64) -> PhysicsScore {
    let phi = record.theta - record.delta;
    let (sin, cos) = phi.sin_cos();
    let (dp, gp) = guard(record.i * cos, epsilon_guard);
    let (dq, gq) = guard(record.i * sin, epsilon_guard);
    PhysicsScore {
        a_p: (record.v - record.p / dp).abs(),
        a_q: (record.v - record.q / dq).abs(),
        guarded: gp || gq,
    }
}

pub fn combine_scores(a_r: &[f64], a_p: &[f64], a_q: &[f64]) -> Result<Vec<f64>> {
    if a_r.len() != a_p.len() || a_r.len() != a_q.len() {
        return Err(Error::Dimension(format!(
            "score lengths {} / {} / {}",
            a_r.len(),
            a_p.len(),
            a_q.len()
        )));
    }
    Ok(a_r.iter().zip(a_p).zip(a_q).map(|((r, p), q)| r + p + q).collect())
}

/// Reduces per-window, per-row scores (`origins.len() × window`) onto the
/// `series_len` timestamps they cover.
pub fn aggregate_to_timestamps(
    window_scores: &[f64],
    origins: &[usize],
    window: usize,
    series_len: usize,
    aggregation: Aggregation,
) -> Result<Vec<f64>> {
    if window_scores.len() != origins.len() * window {
        return Err(Error::Dimension(format!(
            "{} scores for {} windows of {window}",
            window_scores.len(),
            origins.len()
        )));
    }
    let mut acc = vec![0.0; series_len];
    let mut count = vec![0usize; series_len];
    for (scores, &o) in window_scores.chunks_exact(window.max(1)).zip(origins) {
        if o + window > series_len {
            return Err(Error::Dimension(format!("window at {o} runs past {series_len}")));
        }
        for (j, &s) in scores.iter().enumerate() {
            let t = o + j;
            acc[t] = match (aggregation, count[t]) {
                (Aggregation::Mean, _) => acc[t] + s,
                (Aggregation::Max | Aggregation::Min, 0) => s,
                (Aggregation::Max, _) => acc[t].max(s),
                (Aggregation::Min, _) => acc[t].min(s),
            };
            count[t] += 1;
        }
    }
    if let Some(t) = count.iter().position(|&c| c == 0) {
        return Err(Error::Coverage(t));
    }
    if aggregation == Aggregation::Mean {
        acc.iter_mut().zip(&count).for_each(|(a, &c)| *a /= c as f64);
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub mean: f64,
    pub std: f64,
    pub sigma: f64,
    pub value: f64,
}

/// `mean + sigma·std` of the reference, with population std.
pub fn compute_threshold(reference: &[f64], sigma: f64) -> Result<Threshold> {
    if reference.len() < 2 {
        return Err(Error::Statistics(format!(
            "threshold needs at least 2 reference scores, got {}",
            reference.len()
        )));
    }
    if reference.iter().any(|s| !s.is_finite()) {
        return Err(Error::Statistics("non-finite reference score".into()));
    }
    let n = reference.len() as f64;
    let mean = reference.iter().sum::<f64>() / n;
    let var = reference.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    Ok(Threshold {
        mean,
        std,
        sigma,
        value: mean + sigma * std,
    })
}

pub fn classify(scores: &[f64], threshold: &Threshold) -> Vec<bool> {
    scores.iter().map(|&s| s > threshold.value).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Percentages.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize, name: &str, flags: &mut Vec<String>) -> f64 {
    if den == 0 {
        flags.push(format!("{name}_undefined"));
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Metrics {
    /// Metrics from confusion counts, with the names of any ratio whose
    /// denominator was zero.
    pub fn from_confusion(c: &Confusion) -> (Self, Vec<String>) {
        let mut flags = Vec::new();
        let accuracy = ratio(c.tp + c.tn, c.total(), "accuracy", &mut flags);
        let precision = ratio(c.tp, c.tp + c.fp, "precision", &mut flags);
        let recall = ratio(c.tp, c.tp + c.fn_, "recall", &mut flags);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            flags.push("f1_undefined".into());
            0.0
        };
        (
            Self {
                accuracy: 100.0 * accuracy,
                precision: 100.0 * precision,
                recall: 100.0 * recall,
                f1: 100.0 * f1,
            },
            flags,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub confusion: Confusion,
    pub metrics: Metrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<Threshold>,
    pub flags: Vec<String>,
    #[serde(skip)]
    pub predictions: Vec<bool>,
}

impl DetectionReport {
    pub fn from_confusion(confusion: Confusion) -> Self {
        let (metrics, flags) = Metrics::from_confusion(&confusion);
        Self {
            confusion,
            metrics,
            threshold: None,
            flags,
            predictions: Vec::new(),
        }
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn compute_metrics(predictions: &[bool], labels: &[bool]) -> Result<DetectionReport> {
    if predictions.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} predictions against {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let mut c = Confusion::default();
    for (&p, &l) in predictions.iter().zip(labels) {
        match (p, l) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    let mut report = DetectionReport::from_confusion(c);
    report.predictions = predictions.to_vec();
    Ok(report)
}

/// Per-timestamp scores of one series.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnomalyScoreSeries {
    pub timestamps: Vec<i64>,
    pub a_r: Vec<f64>,
    pub a_p: Vec<f64>,
    pub a_q: Vec<f64>,
    pub a: Vec<f64>,
    /// Timestamps where the physics denominators were clamped.
    pub guarded: Vec<usize>,
}

impl AnomalyScoreSeries {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Builds the series from component scores; the physics components may
    /// be absent (all zero) for purely data-driven detectors.
    pub fn assemble(timestamps: Vec<i64>, a_r: Vec<f64>, physics: Option<(Vec<f64>, Vec<f64>, Vec<usize>)>) -> Result<Self> {
        let (a_p, a_q, guarded) = physics.unwrap_or_else(|| (vec![0.0; a_r.len()], vec![0.0; a_r.len()], Vec::new()));
        let a = combine_scores(&a_r, &a_p, &a_q)?;
        if timestamps.len() != a.len() {
            return Err(Error::Dimension(format!("{} timestamps for {} scores", timestamps.len(), a.len())));
        }
        if a.iter().any(|s| !s.is_finite()) {
            return Err(Error::Data("non-finite anomaly score".into()));
        }
        Ok(Self {
            timestamps,
            a_r,
            a_p,
            a_q,
            a,
            guarded,
        })
    }

    /// `t,a_r,a_p,a_q,a,predicted,label`
    pub fn write_csv<W: Write>(&self, writer: W, predicted: &[bool], labels: Option<&[bool]>) -> Result<()> {
        if predicted.len() != self.len() || labels.is_some_and(|l| l.len() != self.len()) {
            return Err(Error::Dimension("predictions or labels do not match the score series".into()));
        }
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "a_r", "a_p", "a_q", "a", "predicted", "label"])?;
        for k in 0..self.len() {
            let label = labels.map(|l| u8::from(l[k]).to_string()).unwrap_or_default();
            w.write_record(&[
                self.timestamps[k].to_string(),
                self.a_r[k].to_string(),
                self.a_p[k].to_string(),
                self.a_q[k].to_string(),
                self.a[k].to_string(),
                u8::from(predicted[k]).to_string(),
                label,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Which score components a detector sums.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    /// Reconstruction plus both physics scores.
    #[default]
    Combined,
    ReconstructionOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoringConfig {
    pub mode: ScoreMode,
    pub aggregation: Aggregation,
    pub epsilon_guard: f64,
    pub sigma: f64,
    /// Window step used when scoring; 1 covers every timestamp many times.
    pub step: usize,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self {
            mode: ScoreMode::Combined,
            aggregation: Aggregation::Min,
            epsilon_guard: DEFAULT_EPSILON_GUARD,
            sigma: DEFAULT_SIGMA,
            step: 1,
        }
    }
}

/// Physics scores for every record of a series.
pub fn score_series_physics(series: &MeasurementSeries, epsilon_guard: f64) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let mut a_p = Vec::with_capacity(series.len());
    let mut a_q = Vec::with_capacity(series.len());
    let mut guarded = Vec::new();
    for (k, r) in series.records.iter().enumerate() {
        let s = score_physics(r, epsilon_guard);
        a_p.push(s.a_p);
        a_q.push(s.a_q);
        if s.guarded {
            guarded.push(k);
        }
    }
    (a_p, a_q, guarded)
}

/// Scores a series (physical units) with a trained autoencoder.
pub fn score_series(model: &PIConvAEModel, series: &MeasurementSeries, config: &ScoringConfig) -> Result<AnomalyScoreSeries> {
    let normalized = normalize(series, model.normalization());
    let dataset = make_windows(&normalized, model.config().window, config.step)?;
    let recon = model.reconstruct_dataset(&dataset)?;
    let mut per_window = Vec::with_capacity(dataset.len() * dataset.window_size());
    for k in 0..dataset.len() {
        let w = dataset.window(k);
        let r = &recon[k * w.len()..(k + 1) * w.len()];
        per_window.extend(score_reconstruction(w, r, Channel::V)?);
    }
    let a_r = aggregate_to_timestamps(
        &per_window,
        dataset.origins(),
        dataset.window_size(),
        series.len(),
        config.aggregation,
    )?;
    let physics = match config.mode {
        ScoreMode::Combined => Some(score_series_physics(series, config.epsilon_guard)),
        ScoreMode::ReconstructionOnly => None,
    };
    AnomalyScoreSeries::assemble(series.records.iter().map(|r| r.timestamp).collect(), a_r, physics)
}

/// Thresholds test scores against the clean reference and evaluates them.
pub fn detect(reference: &AnomalyScoreSeries, test: &AnomalyScoreSeries, labels: &[bool], sigma: f64) -> Result<DetectionReport> {
    let threshold = compute_threshold(&reference.a, sigma)?;
    let predictions = classify(&test.a, &threshold);
    let mut report = compute_metrics(&predictions, labels)?;
    report.threshold = Some(threshold);
    if !test.guarded.is_empty() {
        report.flags.push(format!("guarded_points={}", test.guarded.len()));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(v: f64, i: f64, phi: f64) -> MeasurementRecord {
        MeasurementRecord::from_values(0, [v, i, phi, 0.0, v * i * phi.cos(), v * i * phi.sin()])
    }

    #[test]
    fn reconstruction_scores() {
        let x: Vec<f64> = (0..12).map(|_| 0.5).collect();
        let y: Vec<f64> = (0..12).map(|_| 0.3).collect();
        let s = score_reconstruction(&x, &y, Channel::V).unwrap();
        assert!(s.iter().all(|v| (v - 0.2).abs() < 1e-15));
        assert!(score_reconstruction(&x, &x, Channel::V).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn physics_scores() {
        let s = score_physics(&record(1.02, 0.7, 0.4), DEFAULT_EPSILON_GUARD);
        assert!(s.a_p < 1e-12 && s.a_q < 1e-12 && !s.guarded);
        let phi = std::f64::consts::FRAC_PI_4;
        let r = MeasurementRecord::from_values(0, [1.0, 1.0, phi, 0.0, 0.9 * phi.cos(), phi.sin()]);
        assert!((score_physics(&r, DEFAULT_EPSILON_GUARD).a_p - 0.1).abs() < 1e-12);
        let r = MeasurementRecord::from_values(0, [1.0, 1.0, std::f64::consts::FRAC_PI_2, 0.0, 0.3, 1.0]);
        let s = score_physics(&r, DEFAULT_EPSILON_GUARD);
        assert!(s.guarded && s.a_p.is_finite());
    }

    #[test]
    fn aggregation_rules() {
        // disjoint windows: identity
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(aggregate_to_timestamps(&s, &[0, 2], 2, 4, Aggregation::Mean).unwrap(), s);
        // timestamp 1 covered by two windows
        let got = aggregate_to_timestamps(&[0.0, 0.1, 0.3, 0.0], &[0, 1], 2, 3, Aggregation::Mean).unwrap();
        assert!((got[1] - 0.2).abs() < 1e-15);
        let got = aggregate_to_timestamps(&[0.0, 0.1, 0.3, 0.0], &[0, 1], 2, 3, Aggregation::Max).unwrap();
        assert_eq!(got[1], 0.3);
        let got = aggregate_to_timestamps(&[0.0, 0.1, 0.3, 0.0], &[0, 1], 2, 3, Aggregation::Min).unwrap();
        assert_eq!(got, vec![0.0, 0.1, 0.0]);
        let c = vec![0.7; 3 * 8];
        let got = aggregate_to_timestamps(&c, &(0..8).collect::<Vec<_>>(), 3, 10, Aggregation::Mean).unwrap();
        assert!(got.iter().all(|v| (v - 0.7).abs() < 1e-15));
        assert!(matches!(
            aggregate_to_timestamps(&[1.0, 1.0], &[0], 2, 3, Aggregation::Mean),
            Err(Error::Coverage(2))
        ));
    }

    #[test]
    fn threshold_cases() {
        let t = compute_threshold(&[2.5; 10], 3.0).unwrap();
        assert_eq!(t.value, 2.5);
        let t = compute_threshold(&[0.0, 0.0, 0.0, 4.0], 3.0).unwrap();
        assert!((t.mean - 1.0).abs() < 1e-15 && (t.value - (1.0 + 3.0 * 3f64.sqrt())).abs() < 1e-12);
        assert!(matches!(compute_threshold(&[1.0], 3.0), Err(Error::Statistics(_))));
    }

    #[test]
    fn strict_tie_rule() {
        let t = compute_threshold(&[1.0, 1.0], 3.0).unwrap();
        assert_eq!(classify(&[0.5, 1.0, 1.5], &t), vec![false, false, true]);
    }

    #[test]
    fn metric_cases() {
        let r = DetectionReport::from_confusion(Confusion { tp: 94, fp: 1, tn: 1920, fn_: 11 });
        assert!((r.metrics.precision - 98.95).abs() < 0.01);
        assert!((r.metrics.recall - 89.52).abs() < 0.01);
        assert!((r.metrics.f1 - 94.00).abs() < 0.01);
        let labels = [true, false, true, false];
        let r = compute_metrics(&labels, &labels).unwrap();
        assert_eq!((r.metrics.precision, r.metrics.recall, r.metrics.f1), (100.0, 100.0, 100.0));
        let r = compute_metrics(&[false; 4], &labels).unwrap();
        assert_eq!(r.metrics.recall, 0.0);
        assert_eq!(r.metrics.precision, 0.0);
        assert!(r.flags.iter().any(|f| f == "precision_undefined"));
        assert!(matches!(compute_metrics(&[true], &labels), Err(Error::Dimension(_))));
    }

    #[test]
    fn report_json_shape() {
        let r = DetectionReport::from_confusion(Confusion { tp: 1, fp: 0, tn: 3, fn_: 0 });
        let v: serde_json::Value = serde_json::from_str(&r.to_json_pretty().unwrap()).unwrap();
        assert_eq!(v["confusion"]["fn"], 0);
        assert_eq!(v["metrics"]["f1"], 100.0);
        assert!(v["flags"].is_array());
    }
}

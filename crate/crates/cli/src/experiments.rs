use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use piconvae_core::detection::{compute_metrics, DetectionReport};
use piconvae_core::experiment::{
    comparison_table, evaluate_detector, fit_detector, prepare_synthetic, write_comparison_csv, ComparisonRow,
    DetectorKind, ExperimentConfig,
};
use piconvae_core::model::TrainOptions;

use crate::failure::{data, usage};
use crate::inputs::{parse_fraction, read_config};
use crate::output::Outputs;

fn print_table(rows: &[ComparisonRow]) {
    println!("{:<16} {:>5} {:>5} {:>6} {:>5} {:>9} {:>9} {:>7} {:>7}", "detector", "tp", "fp", "tn", "fn", "accuracy", "precision", "recall", "f1");
    for r in rows {
        println!(
            "{:<16} {:>5} {:>5} {:>6} {:>5} {:>9.2} {:>9.2} {:>7.2} {:>7.2}",
            r.detector, r.tp, r.fp, r.tn, r.fn_, r.accuracy, r.precision, r.recall, r.f1
        );
    }
}

fn table_csv(rows: &[ComparisonRow]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_comparison_csv(rows, &mut buf)?;
    Ok(buf)
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// report.json files, optionally as `name=path`.
    #[arg(long, num_args = 1..)]
    reports: Vec<String>,
    /// scores.csv files (with predicted and label columns), optionally as `name=path`.
    #[arg(long, num_args = 1..)]
    scores: Vec<String>,
}

fn named(raw: &str) -> (String, PathBuf) {
    match raw.split_once('=') {
        Some((name, path)) if !name.is_empty() => (name.to_string(), PathBuf::from(path)),
        _ => {
            let path = PathBuf::from(raw);
            let name = path.parent().and_then(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned());
            let stem = path.file_stem().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            (name.map(|n| format!("{n}/{stem}")).unwrap_or(stem), path)
        }
    }
}

#[derive(Deserialize)]
struct ScoreRow {
    predicted: u8,
    label: Option<u8>,
}

fn report_from_scores(path: &Path) -> Result<DetectionReport> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let (mut pred, mut labels) = (Vec::new(), Vec::new());
    for (k, row) in reader.deserialize::<ScoreRow>().enumerate() {
        let row = row.map_err(|e| data("csv", format!("{} row {}: {e}", path.display(), k + 1)))?;
        let label = row.label.ok_or_else(|| data("no_labels", format!("{} row {} has no label", path.display(), k + 1)))?;
        pred.push(row.predicted != 0);
        labels.push(label != 0);
    }
    Ok(compute_metrics(&pred, &labels)?)
}

pub fn evaluate(args: EvaluateArgs, out_dir: &Path) -> Result<()> {
    if args.reports.is_empty() && args.scores.is_empty() {
        return Err(usage("arguments", "give at least one --reports or --scores file"));
    }
    let mut reports = Vec::new();
    for raw in &args.reports {
        let (name, path) = named(raw);
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let report: DetectionReport =
            serde_json::from_str(&text).map_err(|e| data("report", format!("{}: {e}", path.display())))?;
        reports.push((name, report));
    }
    for raw in &args.scores {
        let (name, path) = named(raw);
        reports.push((name, report_from_scores(&path)?));
    }
    let rows = comparison_table(&reports);
    print_table(&rows);
    let mut out = Outputs::new(out_dir);
    out.add("metrics.csv", table_csv(&rows)?);
    out.add_json("metrics.json", &rows)?;
    out.commit()?;
    Ok(())
}

/// Flags shared by the experiment-running commands.
#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// JSON experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    length: Option<usize>,
    /// Comma-separated detectors: piconvae, convae, kmeans.
    #[arg(long, value_delimiter = ',')]
    detectors: Option<Vec<String>>,
    /// Print one line per training epoch.
    #[arg(long)]
    progress: bool,
}

impl ExperimentArgs {
    fn resolve(&self, default_detectors: &[DetectorKind]) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => read_config(p)?,
            None => ExperimentConfig { detectors: default_detectors.to_vec(), ..ExperimentConfig::default() },
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.epochs {
            cfg.model.epochs = v;
        }
        if let Some(v) = self.length {
            cfg.length = v;
        }
        if let Some(list) = &self.detectors {
            cfg.detectors = list
                .iter()
                .map(|d| match d.trim() {
                    "piconvae" => Ok(DetectorKind::Piconvae),
                    "convae" => Ok(DetectorKind::Convae),
                    "kmeans" => Ok(DetectorKind::Kmeans),
                    other => Err(usage("arguments", format!("unknown detector {other:?}"))),
                })
                .collect::<Result<_>>()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

struct Run {
    name: String,
    report: DetectionReport,
    scores_csv: Vec<u8>,
}

fn run_detectors(cfg: &ExperimentConfig, progress: bool) -> Result<Vec<Run>> {
    let data = prepare_synthetic(cfg)?;
    let mut runs = Vec::new();
    for &kind in &cfg.detectors {
        let mut observer = |r: &piconvae_core::model::EpochRecord| {
            if progress {
                println!("{} epoch {} L_total={:.6e}", kind.name(), r.epoch, r.loss.total);
            }
        };
        let options = TrainOptions { validation: None, observer: Some(&mut observer) };
        let detector = fit_detector(kind, &data, cfg, options)?;
        let run = evaluate_detector(kind, detector, &data, &cfg.scoring)?;
        let mut scores_csv = Vec::new();
        run.scores.write_csv(&mut scores_csv, &run.report.predictions, Some(&data.test.labels))?;
        runs.push(Run { name: kind.name().to_string(), report: run.report, scores_csv });
    }
    Ok(runs)
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
}

pub fn compare(args: CompareArgs, out_dir: &Path) -> Result<()> {
    let all = [DetectorKind::Piconvae, DetectorKind::Convae, DetectorKind::Kmeans];
    let cfg = args.experiment.resolve(&all)?;
    let runs = run_detectors(&cfg, args.experiment.progress)?;
    let mut out = Outputs::new(out_dir);
    let named: Vec<(String, DetectionReport)> = runs.iter().map(|r| (r.name.clone(), r.report.clone())).collect();
    let rows = comparison_table(&named);
    print_table(&rows);
    for run in runs {
        out.add_json(&format!("report_{}.json", run.name), &run.report)?;
        out.add(&format!("scores_{}.csv", run.name), run.scores_csv);
    }
    out.add("comparison.csv", table_csv(&rows)?);
    out.add_json("comparison.json", &rows)?;
    out.add_json("compare_config.json", &cfg)?;
    out.commit()?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct ScarcityArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Leading fractions of the training split, comma-separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_fraction, default_value = "0.5,0.3,0.1")]
    ratios: Vec<f64>,
}

#[derive(Serialize)]
struct ScarcityRow {
    ratio: f64,
    detector: String,
    tp: usize,
    fp: usize,
    tn: usize,
    #[serde(rename = "fn")]
    fn_: usize,
    accuracy: f64,
    precision: f64,
    recall: f64,
    f1: f64,
}

impl ScarcityRow {
    fn new(ratio: f64, r: ComparisonRow) -> Self {
        Self {
            ratio,
            detector: r.detector,
            tp: r.tp,
            fp: r.fp,
            tn: r.tn,
            fn_: r.fn_,
            accuracy: r.accuracy,
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
        }
    }
}

#[derive(Serialize)]
struct ScarcityConfig<'a> {
    ratios: &'a [f64],
    experiment: &'a ExperimentConfig,
}

pub fn scarcity(args: ScarcityArgs, out_dir: &Path) -> Result<()> {
    let cfg = args.experiment.resolve(&[DetectorKind::Piconvae])?;
    let mut rows = Vec::new();
    for &ratio in &args.ratios {
        let run_cfg = ExperimentConfig { train_ratio: ratio, ..cfg.clone() };
        let runs = run_detectors(&run_cfg, args.experiment.progress)?;
        let named: Vec<(String, DetectionReport)> = runs.into_iter().map(|r| (r.name, r.report)).collect();
        for row in comparison_table(&named) {
            println!("ratio {ratio}: {} f1 {:.2} accuracy {:.2}", row.detector, row.f1, row.accuracy);
            rows.push(ScarcityRow::new(ratio, row));
        }
    }
    let mut csv = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        csv.serialize(r)?;
    }
    let mut out = Outputs::new(out_dir);
    out.add("scarcity.csv", csv.into_inner().map_err(|e| e.into_error())?);
    out.add_json("scarcity.json", &rows)?;
    out.add_json("scarcity_config.json", &ScarcityConfig { ratios: &args.ratios, experiment: &cfg })?;
    out.commit()?;
    Ok(())
}

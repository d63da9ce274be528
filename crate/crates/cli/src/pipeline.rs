use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::{Args, ValueEnum};
use serde::Serialize;

use piconvae_core::attacks::{build_attack_suite, SuiteConfig};
use piconvae_core::baselines::{kmeans_fit, DEFAULT_K, DEFAULT_MAX_ITERS};
use piconvae_core::data::{generate_synthetic, split_series, write_csv, SplitRatios, SyntheticConfig};
use piconvae_core::detection::{detect as threshold_and_score, Aggregation, ScoreMode, ScoringConfig};
use piconvae_core::experiment::{derive_seed, leading_fraction, prepare, stage, Detector};
use piconvae_core::attacks::LabeledSeries;
use piconvae_core::model::{train_with, write_loss_log, EpochRecord, PIConvAEConfig, TrainOptions};

use crate::failure::usage;
use crate::inputs::{parse_fraction, parse_split, read_config, read_detector, read_series, KMeansFile};
use crate::output::Outputs;

fn report_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// JSON synthetic-data config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Gaussian measurement noise (per unit).
    #[arg(long)]
    noise_std: Option<f64>,
}

pub fn generate(args: GenerateArgs, out_dir: &Path) -> Result<()> {
    let mut cfg = match &args.config {
        Some(p) => read_config(p)?,
        None => SyntheticConfig::new(10_080, 7, 0.001),
    };
    if let Some(v) = args.length {
        cfg.length = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.noise_std {
        cfg.noise_std = v;
    }
    cfg.validate()?;
    let series = generate_synthetic(&cfg)?;
    let mut csv = Vec::new();
    write_csv(&mut csv, &series, None)?;
    let mut out = Outputs::new(out_dir);
    out.add("series.csv", csv);
    out.add_json("generate_config.json", &cfg)?;
    report_written(&out.commit()?);
    Ok(())
}

#[derive(Debug, Args)]
pub struct InjectArgs {
    /// Clean series CSV.
    #[arg(long)]
    input: PathBuf,
    /// JSON attack suite with indices into the full series; every attack
    /// must fall inside the test split. Defaults to seven evenly spaced attacks.
    #[arg(long)]
    suite: Option<PathBuf>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Train, validation and test fractions.
    #[arg(long, value_parser = parse_split, default_value = "0.7,0.1,0.2")]
    split: SplitRatios,
}

#[derive(Serialize)]
struct InjectConfig<'a> {
    input: &'a Path,
    seed: u64,
    attack_seed: u64,
    split: SplitRatios,
    test_range: [usize; 2],
    suite: &'a SuiteConfig,
}

pub fn inject(args: InjectArgs, out_dir: &Path) -> Result<()> {
    let ingested = read_series(&args.input)?;
    let series = ingested.series;
    let split = split_series(&series, &args.split)?;
    let test = split.ranges[2].clone();
    let absolute = match &args.suite {
        Some(p) => read_config::<SuiteConfig>(p)?,
        None => {
            let mut s = SuiteConfig::default_for(test.len())?;
            shift(&mut s, test.start as isize);
            s
        }
    };
    for spec in &absolute.specs {
        if spec.t_start < test.start || spec.t_end >= test.end {
            return Err(usage(
                "spec",
                format!(
                    "{} attack [{}, {}] outside the test split [{}, {})",
                    spec.kind.name(),
                    spec.t_start,
                    spec.t_end,
                    test.start,
                    test.end
                ),
            ));
        }
    }
    let mut relative = absolute.clone();
    shift(&mut relative, -(test.start as isize));
    let attack_seed = derive_seed(args.seed, stage::ATTACKS);
    let attacked = build_attack_suite(&split.test, &relative, attack_seed)?;

    let mut records = series.records[..test.start].to_vec();
    records.extend(attacked.series.records.iter().copied());
    records.extend(series.records[test.end..].iter().copied());
    let mut labels = ingested.labels.unwrap_or_else(|| vec![false; series.len()]);
    for (k, &l) in attacked.labels.iter().enumerate() {
        labels[test.start + k] |= l;
    }
    let full = piconvae_core::data::MeasurementSeries::new(records, series.sample_rate, series.source)?;

    let mut csv = Vec::new();
    write_csv(&mut csv, &full, Some(&labels))?;
    let mut out = Outputs::new(out_dir);
    out.add("attacked.csv", csv);
    out.add_json(
        "inject_config.json",
        &InjectConfig {
            input: &args.input,
            seed: args.seed,
            attack_seed,
            split: args.split,
            test_range: [test.start, test.end],
            suite: &absolute,
        },
    )?;
    println!("{} attacked samples in {} attacks", attacked.attacked_count(), absolute.specs.len());
    report_written(&out.commit()?);
    Ok(())
}

fn shift(suite: &mut SuiteConfig, by: isize) {
    use piconvae_core::attacks::AttackKind;
    let mv = |t: usize| (t as isize + by) as usize;
    for spec in &mut suite.specs {
        spec.t_start = mv(spec.t_start);
        spec.t_end = mv(spec.t_end);
        if let AttackKind::Replay { t_p } = &mut spec.kind {
            *t_p = mv(*t_p);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainKind {
    Piconvae,
    Convae,
    Kmeans,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Series CSV; only its training split is used for fitting.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "piconvae")]
    kind: TrainKind,
    /// JSON model config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha_phy: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Leading fraction of the training split to fit on.
    #[arg(long, value_parser = parse_fraction, default_value_t = 1.0)]
    train_ratio: f64,
    #[arg(long, value_parser = parse_split, default_value = "0.7,0.1,0.2")]
    split: SplitRatios,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    /// Print one line per epoch.
    #[arg(long)]
    progress: bool,
}

#[derive(Serialize)]
struct TrainConfig<'a> {
    input: &'a Path,
    kind: TrainKind,
    split: SplitRatios,
    train_ratio: f64,
    train_samples: usize,
    model: &'a PIConvAEConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    kmeans_k: Option<usize>,
}

pub fn train(args: TrainArgs, out_dir: &Path) -> Result<()> {
    let mut cfg: PIConvAEConfig = match &args.config {
        Some(p) => read_config(p)?,
        None => PIConvAEConfig::default(),
    };
    if let Some(v) = args.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.alpha_phy {
        cfg.alpha_phy = v;
    }
    if let Some(v) = args.learning_rate {
        cfg.learning_rate = v;
    }
    if args.kind == TrainKind::Convae {
        cfg.alpha_phy = 0.0;
    }
    cfg.validate()?;

    let series = read_series(&args.input)?.series;
    let split = split_series(&series, &args.split)?;
    let train_part = leading_fraction(&split.train, args.train_ratio);
    let train_samples = train_part.len();
    let data = prepare(train_part, split.validation, LabeledSeries::clean(split.test), cfg.window)?;

    let mut out = Outputs::new(out_dir);
    match args.kind {
        TrainKind::Kmeans => {
            let model = kmeans_fit(&data.train_windows, args.k, cfg.seed, DEFAULT_MAX_ITERS)?;
            println!("kmeans k={} iterations={} inertia={:.6}", model.k, model.iterations, model.inertia);
            out.add_json("kmeans.json", &KMeansFile::new(model))?;
        }
        TrainKind::Piconvae | TrainKind::Convae => {
            let progress = args.progress;
            let mut observer = |r: &EpochRecord| {
                if progress {
                    let val = r.validation.map(|v| format!(" val={:.6e}", v.total)).unwrap_or_default();
                    println!("epoch {} L_total={:.6e} lr={:.3e}{val}", r.epoch, r.loss.total, r.lr);
                }
            };
            let options = TrainOptions { validation: Some(&data.validation_windows), observer: Some(&mut observer) };
            let model = train_with(&data.train_windows, &cfg, options)?;
            if let Some(last) = model.history().last() {
                println!("trained {} epochs, final L_total={:.6e}", model.history().len(), last.loss.total);
            }
            let mut ckpt = Vec::new();
            model.save(&mut ckpt)?;
            let mut log = Vec::new();
            write_loss_log(model.history(), &mut log)?;
            out.add("checkpoint.json", ckpt);
            out.add("loss_log.csv", log);
        }
    }
    out.add_json(
        "train_config.json",
        &TrainConfig {
            input: &args.input,
            kind: args.kind,
            split: args.split,
            train_ratio: args.train_ratio,
            train_samples,
            model: &cfg,
            kmeans_k: (args.kind == TrainKind::Kmeans).then_some(args.k),
        },
    )?;
    report_written(&out.commit()?);
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Combined,
    Reconstruction,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AggregationArg {
    Mean,
    Max,
    Min,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Series CSV, usually with a label column; the validation split is the
    /// clean reference and the test split is scored.
    #[arg(long)]
    input: PathBuf,
    /// checkpoint.json or kmeans.json from `train`.
    #[arg(long)]
    model: PathBuf,
    /// JSON scoring config; flags below override its fields.
    #[arg(long)]
    scoring: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    aggregation: Option<AggregationArg>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, value_parser = parse_split, default_value = "0.7,0.1,0.2")]
    split: SplitRatios,
}

#[derive(Serialize)]
struct DetectConfig<'a> {
    input: &'a Path,
    model: &'a Path,
    split: SplitRatios,
    scoring: ScoringConfig,
}

pub fn detect(args: DetectArgs, out_dir: &Path) -> Result<()> {
    let mut scoring: ScoringConfig = match &args.scoring {
        Some(p) => read_config(p)?,
        None => ScoringConfig::default(),
    };
    let mut detector = read_detector(&args.model)?;
    if let Detector::Autoencoder { mode, .. } = &mut detector {
        if args.scoring.is_none() && args.mode.is_none() {
            scoring.mode = *mode;
        }
    }
    if let Some(m) = args.mode {
        scoring.mode = match m {
            ModeArg::Combined => ScoreMode::Combined,
            ModeArg::Reconstruction => ScoreMode::ReconstructionOnly,
        };
    }
    if let Some(a) = args.aggregation {
        scoring.aggregation = match a {
            AggregationArg::Mean => Aggregation::Mean,
            AggregationArg::Max => Aggregation::Max,
            AggregationArg::Min => Aggregation::Min,
        };
    }
    if let Some(s) = args.sigma {
        scoring.sigma = s;
    }
    if !(scoring.sigma.is_finite() && scoring.sigma >= 0.0) || scoring.step == 0 {
        return Err(usage("config", format!("sigma {} and step {} must be >= 0 and >= 1", scoring.sigma, scoring.step)));
    }
    if let Detector::Autoencoder { mode, .. } = &mut detector {
        *mode = scoring.mode;
    }

    let ingested = read_series(&args.input)?;
    let split = split_series(&ingested.series, &args.split)?;
    let test_range = split.ranges[2].clone();
    let labels = ingested.labels.as_ref().map(|l| l[test_range].to_vec());

    let reference = detector.score(&split.validation, &scoring)?;
    let scores = detector.score(&split.test, &scoring)?;
    let truth = labels.clone().unwrap_or_else(|| vec![false; scores.len()]);
    let mut report = threshold_and_score(&reference, &scores, &truth, scoring.sigma)?;
    if labels.is_none() {
        report.flags.push("no_labels".into());
    }

    let mut csv = Vec::new();
    scores.write_csv(&mut csv, &report.predictions, labels.as_deref())?;
    let mut out = Outputs::new(out_dir);
    out.add("scores.csv", csv);
    out.add_json("report.json", &report)?;
    out.add_json(
        "detect_config.json",
        &DetectConfig { input: &args.input, model: &args.model, split: args.split, scoring },
    )?;
    let m = report.metrics;
    println!(
        "flagged {} of {} test points; accuracy {:.2} precision {:.2} recall {:.2} f1 {:.2}",
        report.predictions.iter().filter(|&&p| p).count(),
        scores.len(),
        m.accuracy,
        m.precision,
        m.recall,
        m.f1
    );
    report_written(&out.commit()?);
    Ok(())
}

//! Reading configs, series and trained detectors.

use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use piconvae_core::baselines::KMeansModel;
use piconvae_core::data::{ingest_csv, ColumnMap, Ingested, PerUnitBase, SplitRatios};
use piconvae_core::detection::ScoreMode;
use piconvae_core::experiment::Detector;
use piconvae_core::model::PIConvAEModel;

use crate::failure::{data, usage};

/// JSON config file; unreadable or malformed files are usage errors.
pub fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage("config", format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage("config", format!("invalid config {}: {e}", path.display())))
}

pub fn read_series(path: &Path) -> Result<Ingested> {
    let ingested = ingest_csv(path, &ColumnMap::default(), &PerUnitBase::default())
        .with_context(|| format!("reading {}", path.display()))?;
    if ingested.series.is_empty() {
        return Err(data("empty_series", format!("{} has no usable rows", path.display())));
    }
    if ingested.dropped_rows > 0 {
        println!("dropped {} rows with missing or non-finite values", ingested.dropped_rows);
    }
    Ok(ingested)
}

/// `train,val,test` fractions, e.g. `0.7,0.1,0.2`.
pub fn parse_split(raw: &str) -> std::result::Result<SplitRatios, String> {
    let parts: Vec<f64> = raw
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad fraction {p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    let [train, val, test] = parts[..] else {
        return Err(format!("expected three comma-separated fractions, got {}", parts.len()));
    };
    let ratios = SplitRatios { train, val, test };
    ratios.validate().map_err(|e| e.to_string())?;
    Ok(ratios)
}

pub fn parse_fraction(raw: &str) -> std::result::Result<f64, String> {
    let v: f64 = raw.parse().map_err(|e| format!("{raw:?}: {e}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} outside (0, 1]"))
    }
}

pub const KMEANS_FORMAT: &str = "kmeans-model";

#[derive(Serialize, Deserialize)]
pub struct KMeansFile {
    pub format: String,
    pub version: u32,
    pub model: KMeansModel,
}

impl KMeansFile {
    pub fn new(model: KMeansModel) -> Self {
        Self { format: KMEANS_FORMAT.into(), version: 1, model }
    }
}

/// Loads either an autoencoder checkpoint or a K-Means model file.
/// Autoencoders trained without the physics term score reconstruction only.
pub fn read_detector(path: &Path) -> Result<Detector> {
    let bytes = std::fs::read(path).map_err(|e| usage("model", format!("cannot read model {}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| data("model", format!("{} is not JSON: {e}", path.display())))?;
    if value.get("format").and_then(|f| f.as_str()) == Some(KMEANS_FORMAT) {
        let file: KMeansFile =
            serde_json::from_value(value).map_err(|e| data("model", format!("{}: {e}", path.display())))?;
        return Ok(Detector::Kmeans(file.model));
    }
    let model = PIConvAEModel::load(bytes.as_slice()).map_err(|e| data("model", format!("{}: {e}", path.display())))?;
    let mode = if model.config().alpha_phy == 0.0 { ScoreMode::ReconstructionOnly } else { ScoreMode::Combined };
    Ok(Detector::Autoencoder { model, mode })
}

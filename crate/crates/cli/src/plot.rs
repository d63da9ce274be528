//! Minimal SVG line charts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Subcommand};
use serde::Deserialize;

use piconvae_core::data::{make_windows, normalize, split_series, Channel, SplitRatios, CHANNELS};
use piconvae_core::detection::{aggregate_to_timestamps, Aggregation, DetectionReport};
use piconvae_core::experiment::Detector;

use crate::failure::{data, usage};
use crate::inputs::{parse_split, read_detector, read_series};
use crate::output::Outputs;

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[command(subcommand)]
    kind: PlotKind,
}

#[derive(Debug, Subcommand)]
enum PlotKind {
    /// Training loss components per epoch from loss_log.csv (loss.svg).
    Loss {
        #[arg(long)]
        input: PathBuf,
    },
    /// Anomaly score trace with threshold and labelled points (scores.svg).
    Scores {
        #[arg(long)]
        input: PathBuf,
        /// report.json whose threshold is drawn.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Original against reconstructed channel over the test split (overlay.svg).
    Overlay {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "V")]
        channel: String,
        #[arg(long, value_parser = parse_split, default_value = "0.7,0.1,0.2")]
        split: SplitRatios,
    },
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

struct Line {
    name: String,
    points: Vec<(f64, f64)>,
}

#[derive(Default)]
struct Chart {
    title: String,
    x_label: String,
    y_label: String,
    log_y: bool,
    lines: Vec<Line>,
    hline: Option<(f64, String)>,
    /// Shaded x intervals.
    bands: Vec<(f64, f64)>,
}

impl Chart {
    fn render(&self) -> String {
        let (w, h) = (900.0, 420.0);
        let (left, right, top, bottom) = (70.0, 20.0, 40.0, 50.0);
        let ty = |y: f64| if self.log_y { y.max(1e-300).log10() } else { y };
        let pts = self.lines.iter().flat_map(|l| l.points.iter()).filter(|p| p.0.is_finite() && ty(p.1).is_finite());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(ty(y));
            y1 = y1.max(ty(y));
        }
        if let Some((v, _)) = &self.hline {
            y0 = y0.min(ty(*v));
            y1 = y1.max(ty(*v));
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        if y1 <= y0 {
            y1 = y0 + 1.0;
        }
        let pad = 0.05 * (y1 - y0);
        let (y0, y1) = (y0 - pad, y1 + pad);
        let sx = |x: f64| left + (x - x0) / (x1 - x0) * (w - left - right);
        let sy = |y: f64| top + (y1 - ty(y)) / (y1 - y0) * (h - top - bottom);

        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#);
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        for &(a, b) in &self.bands {
            let _ = writeln!(
                s,
                r##"<rect x="{:.2}" y="{top}" width="{:.2}" height="{:.2}" fill="#f4c7c3" opacity="0.6"/>"##,
                sx(a),
                (sx(b) - sx(a)).max(1.0),
                h - top - bottom
            );
        }
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, w / 2.0, escape(&self.title));
        let _ = writeln!(s, r#"<line x1="{left}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, h - bottom, w - right, h - bottom);
        let _ = writeln!(s, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#, h - bottom);
        for k in 0..=4 {
            let fx = x0 + (x1 - x0) * k as f64 / 4.0;
            let fy = y0 + (y1 - y0) * k as f64 / 4.0;
            let ylabel = if self.log_y { format!("1e{fy:.1}") } else { tick(fy) };
            let py = top + (y1 - fy) / (y1 - y0) * (h - top - bottom);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#, sx(fx), h - bottom + 16.0, tick(fx));
            let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{ylabel}</text>"#, left - 6.0, py + 4.0);
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, w / 2.0, h - 12.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            h / 2.0,
            h / 2.0,
            escape(&self.y_label)
        );
        for (n, line) in self.lines.iter().enumerate() {
            let mut d = String::new();
            for &(x, y) in line.points.iter().filter(|p| p.0.is_finite() && ty(p.1).is_finite()) {
                let _ = write!(d, "{}{:.2},{:.2}", if d.is_empty() { "M" } else { " L" }, sx(x), sy(y));
            }
            let color = COLORS[n % COLORS.len()];
            let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.2"/>"#);
            let ly = top + 14.0 + 16.0 * n as f64;
            let _ = writeln!(s, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, w - right - 150.0, w - right - 130.0);
            let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, w - right - 125.0, ly + 4.0, escape(&line.name));
        }
        if let Some((v, name)) = &self.hline {
            let y = sy(*v);
            let _ = writeln!(s, r##"<line x1="{left}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#444" stroke-dasharray="6 4"/>"##, w - right);
            let _ = writeln!(s, r#"<text x="{}" y="{:.2}">{}</text>"#, left + 6.0, y - 4.0, escape(name));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e5) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Contiguous runs of `true` as inclusive x intervals.
fn runs(xs: &[f64], flags: &[bool]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut start = None;
    for (k, &f) in flags.iter().enumerate() {
        match (f, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                out.push((xs[s], xs[k - 1]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((xs[s], xs[flags.len() - 1]));
    }
    out
}

#[derive(Deserialize)]
struct LossRow {
    epoch: f64,
    #[serde(rename = "L_data")]
    data: f64,
    #[serde(rename = "L_phy_P")]
    phy_p: f64,
    #[serde(rename = "L_phy_Q")]
    phy_q: f64,
    #[serde(rename = "L_total")]
    total: f64,
}

#[derive(Deserialize)]
struct ScoreRow {
    t: f64,
    a: f64,
    label: Option<u8>,
}

fn read_rows<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    reader
        .deserialize()
        .enumerate()
        .map(|(k, r)| r.map_err(|e| data("csv", format!("{} row {}: {e}", path.display(), k + 1))))
        .collect()
}

fn loss_chart(input: &Path) -> Result<Chart> {
    let rows: Vec<LossRow> = read_rows(input)?;
    let line = |name: &str, f: fn(&LossRow) -> f64| Line { name: name.into(), points: rows.iter().map(|r| (r.epoch, f(r))).collect() };
    Ok(Chart {
        title: "Training loss".into(),
        x_label: "epoch".into(),
        y_label: "loss (log scale)".into(),
        log_y: true,
        lines: vec![line("L_total", |r| r.total), line("L_data", |r| r.data), line("L_phy_P", |r| r.phy_p), line("L_phy_Q", |r| r.phy_q)],
        ..Chart::default()
    })
}

fn scores_chart(input: &Path, report: Option<&Path>) -> Result<Chart> {
    let rows: Vec<ScoreRow> = read_rows(input)?;
    let xs: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let labels: Vec<bool> = rows.iter().map(|r| r.label.unwrap_or(0) != 0).collect();
    let hline = match report {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let r: DetectionReport = serde_json::from_str(&text).map_err(|e| data("report", format!("{}: {e}", p.display())))?;
            r.threshold.map(|t| (t.value, format!("threshold {:.4}", t.value)))
        }
        None => None,
    };
    Ok(Chart {
        title: "Anomaly score".into(),
        x_label: "t".into(),
        y_label: "a (log scale)".into(),
        log_y: true,
        lines: vec![Line { name: "a".into(), points: rows.iter().map(|r| (r.t, r.a)).collect() }],
        hline,
        bands: runs(&xs, &labels),
    })
}

fn overlay_chart(input: &Path, model: &Path, channel: &str, split: &SplitRatios) -> Result<Chart> {
    let channel = Channel::from_name(channel).ok_or_else(|| usage("arguments", format!("unknown channel {channel:?}")))?;
    let Detector::Autoencoder { model, .. } = read_detector(model)? else {
        return Err(usage("model", "overlay needs an autoencoder checkpoint"));
    };
    let ingested = read_series(input)?;
    let parts = split_series(&ingested.series, split)?;
    let test = &parts.test;
    let norm = model.normalization();
    let z = normalize(test, norm);
    let ds = make_windows(&z, model.config().window, 1)?;
    let recon = model.reconstruct_dataset(&ds)?;
    let c = channel.index();
    let per_window: Vec<f64> = recon.iter().skip(c).step_by(CHANNELS).copied().collect();
    let avg = aggregate_to_timestamps(&per_window, ds.origins(), ds.window_size(), test.len(), Aggregation::Mean)?;
    let xs: Vec<f64> = test.records.iter().map(|r| r.timestamp as f64).collect();
    let original: Vec<(f64, f64)> = test.records.iter().map(|r| (r.timestamp as f64, r.get(channel))).collect();
    let rebuilt: Vec<(f64, f64)> = xs.iter().zip(&avg).map(|(&x, &v)| (x, norm.denormalize_value(c, v))).collect();
    let labels: Vec<bool> = match &ingested.labels {
        Some(l) => l[parts.ranges[2].clone()].to_vec(),
        None => vec![false; test.len()],
    };
    Ok(Chart {
        title: format!("{} original and reconstruction (test split)", channel.name()),
        x_label: "t".into(),
        y_label: channel.name().into(),
        lines: vec![Line { name: "original".into(), points: original }, Line { name: "reconstruction".into(), points: rebuilt }],
        bands: runs(&xs, &labels),
        ..Chart::default()
    })
}

pub fn plot(args: PlotArgs, out_dir: &Path) -> Result<()> {
    let (name, chart) = match &args.kind {
        PlotKind::Loss { input } => ("loss.svg", loss_chart(input)?),
        PlotKind::Scores { input, report } => ("scores.svg", scores_chart(input, report.as_deref())?),
        PlotKind::Overlay { input, model, channel, split } => ("overlay.svg", overlay_chart(input, model, channel, split)?),
    };
    let mut out = Outputs::new(out_dir);
    out.add(name, chart.render().into_bytes());
    for p in out.commit()? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

//! Label-producing attack transformations of a measurement series.
//!
//! Every injector rewrites one channel (voltage magnitude by default) on a
//! closed interval `[t_start, t_end]` of sample positions and labels
//! exactly that interval. Values used by an attack (the onset value for
//! ramp/DoS, the recorded segment for replay) are read from the series the
//! attack is applied to before any modification; the suite builder reads
//! them from the pristine input so that disjoint attacks commute.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{Channel, MeasurementSeries};
use crate::error::{Error, Result};

/// Time-indexed coefficient of the stealth attack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Profile {
    Constant { value: f64 },
    /// `offset + amplitude·sin(frequency·t + phase)` at absolute position `t`.
    Sine {
        offset: f64,
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// One value per attacked sample.
    Values { values: Vec<f64> },
}

impl Profile {
    fn at(&self, t: usize, k: usize) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Sine {
                offset,
                amplitude,
                frequency,
                phase,
            } => offset + amplitude * (frequency * t as f64 + phase).sin(),
            Profile::Values { values } => values[k],
        }
    }

    fn covers(&self, len: usize) -> bool {
        match self {
            Profile::Values { values } => values.len() == len,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum AttackKind {
    /// `z + (−1)^b·Δz`; `b = 0` additive, `b = 1` deductive.
    Combined { b: u8, delta_z: f64 },
    /// `α(t)·(z + β(t))`
    Stealth { alpha: Profile, beta: Profile },
    /// `z_record(t_p + k)` from an earlier segment.
    Replay { t_p: usize },
    /// `z(t_start) + m·(t − t_start) + q(t)`
    Ramp { m_slope: f64, noise_std: f64 },
    /// `z(t_start) + q(t)`
    Dos { noise_std: f64 },
}

impl AttackKind {
    pub fn name(&self) -> &'static str {
        match self {
            AttackKind::Combined { b: 0, .. } => "additive",
            AttackKind::Combined { .. } => "deductive",
            AttackKind::Stealth { .. } => "stealth",
            AttackKind::Replay { .. } => "replay",
            AttackKind::Ramp { .. } => "ramp",
            AttackKind::Dos { .. } => "dos",
        }
    }
}

fn default_channel() -> Channel {
    Channel::V
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    #[serde(flatten)]
    pub kind: AttackKind,
    pub t_start: usize,
    pub t_end: usize,
    #[serde(default = "default_channel")]
    pub channel: Channel,
}

impl AttackSpec {
    pub fn new(kind: AttackKind, t_start: usize, t_end: usize) -> Self {
        Self {
            kind,
            t_start,
            t_end,
            channel: Channel::V,
        }
    }

    pub fn len(&self) -> usize {
        self.t_end + 1 - self.t_start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn overlaps(&self, other: &AttackSpec) -> bool {
        self.t_start <= other.t_end && other.t_start <= self.t_end
    }

    /// Checks the interval against a series length and the kind's own
    /// parameter constraints.
    pub fn validate(&self, series_len: usize) -> Result<()> {
        if self.t_start > self.t_end || self.t_end >= series_len {
            return Err(Error::Spec(format!(
                "interval [{}, {}] invalid for a series of {series_len} samples",
                self.t_start, self.t_end
            )));
        }
        let len = self.len();
        match &self.kind {
            AttackKind::Combined { b, delta_z } => {
                if *b > 1 {
                    return Err(Error::Spec(format!("combined attack b={b} must be 0 or 1")));
                }
                if !(*delta_z >= 0.0) {
                    return Err(Error::Spec(format!("combined attack delta_z={delta_z} must be >= 0")));
                }
            }
            AttackKind::Stealth { alpha, beta } => {
                if !alpha.covers(len) || !beta.covers(len) {
                    return Err(Error::Spec(format!(
                        "stealth coefficient sequences must have {len} values"
                    )));
                }
                if let Some(k) = (0..len).find(|&k| !(alpha.at(self.t_start + k, k) > 0.0)) {
                    return Err(Error::Spec(format!("stealth alpha not positive at t={}", self.t_start + k)));
                }
            }
            AttackKind::Replay { t_p } => {
                if t_p + (self.t_end - self.t_start) >= self.t_start {
                    return Err(Error::Spec(format!(
                        "replay source [{t_p}, {}] must end before t_start={}",
                        t_p + (self.t_end - self.t_start),
                        self.t_start
                    )));
                }
            }
            AttackKind::Ramp { noise_std, .. } | AttackKind::Dos { noise_std } => {
                if !(*noise_std >= 0.0) || !noise_std.is_finite() {
                    return Err(Error::Spec(format!("noise_std {noise_std} must be finite and >= 0")));
                }
            }
        }
        Ok(())
    }
}

/// A manipulated series with ground-truth point labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSeries {
    pub series: MeasurementSeries,
    pub labels: Vec<bool>,
    pub specs: Vec<AttackSpec>,
}

impl LabeledSeries {
    pub fn clean(series: MeasurementSeries) -> Self {
        let labels = vec![false; series.len()];
        Self {
            series,
            labels,
            specs: Vec::new(),
        }
    }

    pub fn attacked_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }
}

/// Proxy for the bad-data-detector bound on FDIA magnitudes: an attacked
/// value must stay within `max_relative·|clean|` of the clean value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StealthCap {
    pub max_relative: f64,
}

impl Default for StealthCap {
    fn default() -> Self {
        Self { max_relative: 0.05 }
    }
}

fn gaussian(std: f64, rng: &mut dyn RngCore) -> f64 {
    if std == 0.0 {
        0.0
    } else {
        Normal::new(0.0, std).expect("validated std").sample(rng)
    }
}

/// Attacked values for `spec`, computed from `pristine`.
fn attacked_values(
    spec: &AttackSpec,
    pristine: &MeasurementSeries,
    rng: &mut dyn RngCore,
    cap: Option<StealthCap>,
) -> Result<Vec<f64>> {
    spec.validate(pristine.len())?;
    let ch = spec.channel;
    let z = |t: usize| pristine.records[t].get(ch);
    let range = spec.t_start..=spec.t_end;
    let values: Vec<f64> = match &spec.kind {
        AttackKind::Combined { b, delta_z } => {
            let signed = if *b == 0 { *delta_z } else { -*delta_z };
            range.map(|t| z(t) + signed).collect()
        }
        AttackKind::Stealth { alpha, beta } => range
            .enumerate()
            .map(|(k, t)| alpha.at(t, k) * (z(t) + beta.at(t, k)))
            .collect(),
        AttackKind::Replay { t_p } => (0..spec.len()).map(|k| z(t_p + k)).collect(),
        AttackKind::Ramp { m_slope, noise_std } => {
            let onset = z(spec.t_start);
            range
                .map(|t| onset + m_slope * (t - spec.t_start) as f64 + gaussian(*noise_std, rng))
                .collect()
        }
        AttackKind::Dos { noise_std } => {
            let onset = z(spec.t_start);
            range.map(|_| onset + gaussian(*noise_std, rng)).collect()
        }
    };
    if let (Some(cap), AttackKind::Combined { .. } | AttackKind::Stealth { .. }) = (cap, &spec.kind) {
        for (k, v) in values.iter().enumerate() {
            let clean = z(spec.t_start + k);
            if (v - clean).abs() > cap.max_relative * clean.abs() {
                return Err(Error::Spec(format!(
                    "{} attack at t={} moves {ch} by {:.4}, beyond the {:.1}% stealthiness cap",
                    spec.kind.name(),
                    spec.t_start + k,
                    v - clean,
                    100.0 * cap.max_relative
                )));
            }
        }
    }
    Ok(values)
}

/// Applies any attack kind to a fresh copy of `series`.
pub fn inject<R: RngCore>(series: &MeasurementSeries, spec: &AttackSpec, rng: &mut R) -> Result<LabeledSeries> {
    inject_capped(series, spec, rng, None)
}

pub fn inject_capped<R: RngCore>(
    series: &MeasurementSeries,
    spec: &AttackSpec,
    rng: &mut R,
    cap: Option<StealthCap>,
) -> Result<LabeledSeries> {
    let values = attacked_values(spec, series, rng, cap)?;
    let mut out = LabeledSeries::clean(series.clone());
    write_attack(&mut out, spec, &values);
    Ok(out)
}

fn write_attack(out: &mut LabeledSeries, spec: &AttackSpec, values: &[f64]) {
    for (k, &v) in values.iter().enumerate() {
        let t = spec.t_start + k;
        out.series.records[t].set(spec.channel, v);
        out.labels[t] = true;
    }
    out.specs.push(spec.clone());
}

fn expect_kind(spec: &AttackSpec, wanted: &str, ok: bool) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Spec(format!("expected a {wanted} spec, got {}", spec.kind.name())))
    }
}

pub fn inject_combined<R: RngCore>(series: &MeasurementSeries, spec: &AttackSpec, rng: &mut R) -> Result<LabeledSeries> {
    expect_kind(spec, "combined", matches!(spec.kind, AttackKind::Combined { .. }))?;
    inject(series, spec, rng)
}

pub fn inject_stealth(series: &MeasurementSeries, spec: &AttackSpec) -> Result<LabeledSeries> {
    expect_kind(spec, "stealth", matches!(spec.kind, AttackKind::Stealth { .. }))?;
    // deterministic kind: the rng is never drawn from
    inject(series, spec, &mut ChaCha8Rng::seed_from_u64(0))
}

pub fn inject_replay(series: &MeasurementSeries, spec: &AttackSpec) -> Result<LabeledSeries> {
    expect_kind(spec, "replay", matches!(spec.kind, AttackKind::Replay { .. }))?;
    // deterministic kind: the rng is never drawn from
    inject(series, spec, &mut ChaCha8Rng::seed_from_u64(0))
}

pub fn inject_ramp<R: RngCore>(series: &MeasurementSeries, spec: &AttackSpec, rng: &mut R) -> Result<LabeledSeries> {
    expect_kind(spec, "ramp", matches!(spec.kind, AttackKind::Ramp { .. }))?;
    inject(series, spec, rng)
}

pub fn inject_dos<R: RngCore>(series: &MeasurementSeries, spec: &AttackSpec, rng: &mut R) -> Result<LabeledSeries> {
    expect_kind(spec, "dos", matches!(spec.kind, AttackKind::Dos { .. }))?;
    inject(series, spec, rng)
}

fn default_cap() -> Option<StealthCap> {
    Some(StealthCap::default())
}

/// A set of disjoint attacks applied to one (test) series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub specs: Vec<AttackSpec>,
    #[serde(default = "default_cap")]
    pub stealth_cap: Option<StealthCap>,
}

impl SuiteConfig {
    pub fn empty() -> Self {
        Self {
            specs: Vec::new(),
            stealth_cap: default_cap(),
        }
    }

    /// Seven 15-sample attacks spread evenly over a test series:
    /// additive, deductive, stealth, ramp +0.25, ramp −0.25, replay, DoS.
    pub fn default_for(len: usize) -> Result<Self> {
        const WIDTH: usize = 15;
        let kinds = [
            AttackKind::Combined { b: 0, delta_z: 0.03 },
            AttackKind::Combined { b: 1, delta_z: 0.03 },
            AttackKind::Stealth {
                alpha: Profile::Sine {
                    offset: 1.02,
                    amplitude: 0.01,
                    frequency: 1.0,
                    phase: 0.0,
                },
                beta: Profile::Constant { value: 0.005 },
            },
            AttackKind::Ramp { m_slope: 0.25, noise_std: 0.001 },
            AttackKind::Ramp { m_slope: -0.25, noise_std: 0.001 },
            AttackKind::Replay { t_p: 0 },
            AttackKind::Dos { noise_std: 0.002 },
        ];
        let spacing = len / (kinds.len() + 1);
        if spacing < 2 * WIDTH {
            return Err(Error::Config(format!("test series of {len} samples too short for the default suite")));
        }
        let specs = kinds
            .into_iter()
            .enumerate()
            .map(|(n, kind)| {
                let t_start = (n + 1) * spacing;
                let kind = match kind {
                    // replay the same window of the previous gap
                    AttackKind::Replay { .. } => AttackKind::Replay { t_p: t_start - spacing / 2 - WIDTH },
                    other => other,
                };
                AttackSpec::new(kind, t_start, t_start + WIDTH - 1)
            })
            .collect();
        Ok(Self {
            specs,
            stealth_cap: default_cap(),
        })
    }
}

/// RNG stream for one spec, keyed by its onset so the result does not
/// depend on the order specs are listed in.
fn spec_rng(seed: u64, spec: &AttackSpec) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(spec.t_start as u64);
    rng
}

pub fn build_attack_suite(series: &MeasurementSeries, suite: &SuiteConfig, seed: u64) -> Result<LabeledSeries> {
    for (a, spec) in suite.specs.iter().enumerate() {
        spec.validate(series.len())?;
        if let Some(other) = suite.specs[..a].iter().find(|o| o.overlaps(spec)) {
            return Err(Error::Spec(format!(
                "attack intervals [{}, {}] and [{}, {}] overlap",
                other.t_start, other.t_end, spec.t_start, spec.t_end
            )));
        }
    }
    let mut out = LabeledSeries::clean(series.clone());
    for spec in &suite.specs {
        let values = attacked_values(spec, series, &mut spec_rng(seed, spec), suite.stealth_cap)?;
        write_attack(&mut out, spec, &values);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{MeasurementRecord, Source};

    fn series_with_v(v: &[f64]) -> MeasurementSeries {
        let records = v
            .iter()
            .enumerate()
            .map(|(t, &x)| MeasurementRecord::from_values(t as i64, [x, 0.5, 0.0, -0.3, 0.4, 0.1]))
            .collect();
        MeasurementSeries::new(records, 1.0, Source::Synthetic).unwrap()
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn combined_additive_and_deductive() {
        let s = series_with_v(&[1.0; 10]);
        let add = inject_combined(&s, &AttackSpec::new(AttackKind::Combined { b: 0, delta_z: 0.05 }, 2, 4), &mut rng()).unwrap();
        assert_eq!(add.series.records[3].v, 1.05);
        assert_eq!(add.series.records[5].v, 1.0);
        let ded = inject_combined(&s, &AttackSpec::new(AttackKind::Combined { b: 1, delta_z: 0.05 }, 2, 4), &mut rng()).unwrap();
        assert_eq!(ded.series.records[2].v, 0.95);
        assert_eq!(ded.attacked_count(), 3);
    }

    #[test]
    fn zero_magnitude_still_labels() {
        let s = series_with_v(&[1.0; 10]);
        let out = inject_combined(&s, &AttackSpec::new(AttackKind::Combined { b: 0, delta_z: 0.0 }, 5, 9), &mut rng()).unwrap();
        assert_eq!(out.series, s);
        assert_eq!(out.labels.iter().filter(|&&l| l).count(), 5);
        assert!(out.labels[5..].iter().all(|&l| l));
    }

    #[test]
    fn stealth_identity_and_constant_multiplier() {
        let s = series_with_v(&[1.0; 10]);
        let ident = AttackKind::Stealth {
            alpha: Profile::Constant { value: 1.0 },
            beta: Profile::Constant { value: 0.0 },
        };
        assert_eq!(inject_stealth(&s, &AttackSpec::new(ident, 0, 9)).unwrap().series, s);
        let scale = AttackKind::Stealth {
            alpha: Profile::Constant { value: 1.02 },
            beta: Profile::Constant { value: 0.0 },
        };
        assert_eq!(inject_stealth(&s, &AttackSpec::new(scale, 0, 9)).unwrap().series.records[4].v, 1.02);
    }

    #[test]
    fn stealth_sequence_length_checked() {
        let s = series_with_v(&[1.0; 10]);
        let kind = AttackKind::Stealth {
            alpha: Profile::Values { values: vec![1.0; 3] },
            beta: Profile::Constant { value: 0.0 },
        };
        assert!(matches!(inject_stealth(&s, &AttackSpec::new(kind, 0, 4)), Err(Error::Spec(_))));
    }

    #[test]
    fn replay_hand_example_and_overlap_rejected() {
        let s = series_with_v(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let out = inject_replay(&s, &AttackSpec::new(AttackKind::Replay { t_p: 0 }, 3, 5)).unwrap();
        assert_eq!(out.series.channel(Channel::V), vec![1.0, 2.0, 3.0, 1.0, 2.0, 3.0]);
        assert!(matches!(
            inject_replay(&s, &AttackSpec::new(AttackKind::Replay { t_p: 1 }, 3, 5)),
            Err(Error::Spec(_))
        ));
    }

    #[test]
    fn self_similar_replay_keeps_values() {
        let s = series_with_v(&[2.0; 12]);
        let out = inject_replay(&s, &AttackSpec::new(AttackKind::Replay { t_p: 1 }, 8, 10)).unwrap();
        assert_eq!(out.series, s);
        assert_eq!(out.attacked_count(), 3);
    }

    #[test]
    fn ramp_and_dos_noise_free() {
        let s = series_with_v(&[1.0, 1.1, 0.9, 1.3, 1.0, 0.8]);
        let ramp = inject_ramp(&s, &AttackSpec::new(AttackKind::Ramp { m_slope: 0.25, noise_std: 0.0 }, 1, 4), &mut rng()).unwrap();
        assert_eq!(&ramp.series.channel(Channel::V)[1..5], &[1.1, 1.35, 1.6, 1.85]);
        let flat = inject_ramp(&s, &AttackSpec::new(AttackKind::Ramp { m_slope: 0.0, noise_std: 0.0 }, 1, 4), &mut rng()).unwrap();
        assert!(flat.series.channel(Channel::V)[1..5].iter().all(|&v| v == 1.1));
        let dos = inject_dos(&s, &AttackSpec::new(AttackKind::Dos { noise_std: 0.0 }, 2, 5), &mut rng()).unwrap();
        assert!(dos.series.channel(Channel::V)[2..].iter().all(|&v| v == 0.9));
        let single = inject_dos(&s, &AttackSpec::new(AttackKind::Dos { noise_std: 0.0 }, 3, 3), &mut rng()).unwrap();
        assert_eq!(single.series.records[3].v, 1.3);
    }

    #[test]
    fn wrong_kind_and_bad_interval() {
        let s = series_with_v(&[1.0; 5]);
        let dos = AttackSpec::new(AttackKind::Dos { noise_std: 0.0 }, 0, 2);
        assert!(inject_ramp(&s, &dos, &mut rng()).is_err());
        let late = AttackSpec::new(AttackKind::Dos { noise_std: 0.0 }, 3, 5);
        assert!(matches!(inject_dos(&s, &late, &mut rng()), Err(Error::Spec(_))));
    }

    #[test]
    fn cap_rejects_large_fdia() {
        let s = series_with_v(&[1.0; 10]);
        let suite = SuiteConfig {
            specs: vec![AttackSpec::new(AttackKind::Combined { b: 0, delta_z: 0.08 }, 0, 3)],
            stealth_cap: Some(StealthCap::default()),
        };
        assert!(matches!(build_attack_suite(&s, &suite, 0), Err(Error::Spec(_))));
    }

    #[test]
    fn suite_rejects_overlap_and_empty_is_identity() {
        let s = series_with_v(&[1.0; 40]);
        let suite = SuiteConfig {
            specs: vec![
                AttackSpec::new(AttackKind::Dos { noise_std: 0.0 }, 0, 10),
                AttackSpec::new(AttackKind::Dos { noise_std: 0.0 }, 10, 12),
            ],
            stealth_cap: None,
        };
        assert!(matches!(build_attack_suite(&s, &suite, 0), Err(Error::Spec(_))));
        let out = build_attack_suite(&s, &SuiteConfig::empty(), 0).unwrap();
        assert_eq!(out.series, s);
        assert_eq!(out.attacked_count(), 0);
    }

    #[test]
    fn spec_json_shape() {
        let json = r#"{"kind":"ramp","params":{"m_slope":0.25,"noise_std":0.0},"t_start":10,"t_end":24}"#;
        let spec: AttackSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec, AttackSpec::new(AttackKind::Ramp { m_slope: 0.25, noise_std: 0.0 }, 10, 24));
        let back = serde_json::to_value(&spec).unwrap();
        assert_eq!(back["params"]["m_slope"], 0.25);
        assert_eq!(back["channel"], "V");
    }
}

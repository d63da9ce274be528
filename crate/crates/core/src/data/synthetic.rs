//! Kirchhoff-consistent synthetic bus measurements.
//!
//! Voltage follows a daily curve around 1 p.u. with a slower sub-daily
//! swing and small correlated fluctuations. Current follows a two-peak
//! load profile, reduced at midday by a cloud-modulated solar infeed, with
//! faster fluctuations. The power-factor angle `θ−δ` is kept inside a
//! configurable band. `P` and `Q` are computed exactly from the other four
//! channels before independent Gaussian noise is added to every channel.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::record::{MeasurementRecord, MeasurementSeries, Source};
use crate::error::{Error, Result};

pub const MIN_LENGTH: usize = 200;
/// Minimum distance of the angle band from multiples of π/2.
pub const ANGLE_MARGIN: f64 = 0.05;

fn default_samples_per_day() -> usize {
    1440
}

fn default_angle_band() -> (f64, f64) {
    (0.15, 0.65)
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub length: usize,
    pub seed: u64,
    pub noise_std: f64,
    #[serde(default = "default_true")]
    pub anomaly_free: bool,
    #[serde(default = "default_samples_per_day")]
    pub samples_per_day: usize,
    /// Allowed interval for `θ−δ`, radians.
    #[serde(default = "default_angle_band")]
    pub angle_band: (f64, f64),
}

impl SyntheticConfig {
    pub fn new(length: usize, seed: u64, noise_std: f64) -> Self {
        Self {
            length,
            seed,
            noise_std,
            anomaly_free: true,
            samples_per_day: default_samples_per_day(),
            angle_band: default_angle_band(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length < MIN_LENGTH {
            return Err(Error::Config(format!(
                "synthetic length {} below minimum {MIN_LENGTH}",
                self.length
            )));
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return Err(Error::Config(format!("noise_std {} must be finite and >= 0", self.noise_std)));
        }
        if !self.anomaly_free {
            return Err(Error::Config(
                "the generator only produces clean data; inject attacks separately".into(),
            ));
        }
        if self.samples_per_day < 2 {
            return Err(Error::Config("samples_per_day must be at least 2".into()));
        }
        let (lo, hi) = self.angle_band;
        let k_lo = (lo / FRAC_PI_2).floor();
        let clear = lo < hi
            && (hi / FRAC_PI_2).floor() == k_lo
            && lo - k_lo * FRAC_PI_2 >= ANGLE_MARGIN
            && (k_lo + 1.0) * FRAC_PI_2 - hi >= ANGLE_MARGIN;
        if !clear {
            return Err(Error::Config(format!(
                "angle band ({lo}, {hi}) must lie strictly between consecutive multiples of pi/2 with margin {ANGLE_MARGIN}"
            )));
        }
        Ok(())
    }
}

/// AR(1) process with a given stationary standard deviation.
struct Ar1 {
    rho: f64,
    innovation: f64,
    state: f64,
}

impl Ar1 {
    fn new(rho: f64, stationary_std: f64, rng: &mut ChaCha8Rng) -> Self {
        let z: f64 = StandardNormal.sample(rng);
        Self {
            rho,
            innovation: stationary_std * (1.0 - rho * rho).sqrt(),
            state: z * stationary_std,
        }
    }

    fn next(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.state = self.rho * self.state + self.innovation * z;
        self.state
    }
}

fn bump(hour: f64, center: f64, width: f64) -> f64 {
    // wrap so evening peaks still influence early morning
    let d = (hour - center + 12.0).rem_euclid(24.0) - 12.0;
    (-(d / width).powi(2)).exp()
}

/// Noise-free channel values `[V, I, θ, δ, P, Q]` for every sample.
fn clean_values(config: &SyntheticConfig) -> Vec<[f64; 6]> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let spd = config.samples_per_day as f64;
    let (band_lo, band_hi) = config.angle_band;
    let band_mid = 0.5 * (band_lo + band_hi);
    let band_half = 0.5 * (band_hi - band_lo);

    let phase_v: f64 = rng.random_range(0.0..2.0 * PI);
    let phase_sub: f64 = rng.random_range(0.0..2.0 * PI);
    let mut v_fluct = Ar1::new(0.97, 0.002, &mut rng);
    let mut cloud = Ar1::new(0.995, 0.15, &mut rng);
    let mut wind = Ar1::new(0.98, 0.03, &mut rng);
    let mut i_fast = Ar1::new(0.8, 0.01, &mut rng);
    let mut phi_fluct = Ar1::new(0.95, 0.25 * band_half, &mut rng);
    let mut theta_fluct = Ar1::new(0.9, 0.003, &mut rng);

    (0..config.length)
        .map(|t| {
            let t = t as f64;
            let day = 2.0 * PI * t / spd;
            let hour = (t % spd) / spd * 24.0;

            let v = 1.0
                + 0.02 * (day + phase_v).sin()
                + 0.006 * (2.0 * PI * t / (spd / 8.3) + phase_sub).sin()
                + v_fluct.next(&mut rng);

            let load = 0.55 + 0.12 * bump(hour, 8.0, 2.0) + 0.18 * bump(hour, 19.0, 2.5);
            let sun = (PI * (hour - 6.0) / 12.0).sin().max(0.0);
            let clearness = (1.0 - cloud.next(&mut rng).abs()).clamp(0.4, 1.0);
            let i = (load - 0.15 * sun * clearness + wind.next(&mut rng) + i_fast.next(&mut rng)).max(0.1);

            let phi = (band_mid + 0.5 * band_half * (day + 0.7).sin() + phi_fluct.next(&mut rng))
                .clamp(band_lo, band_hi);
            let theta = -0.04 + 0.015 * (day - 0.3).sin() + theta_fluct.next(&mut rng);
            let delta = theta - phi;
            let angle = theta - delta;
            let p = v * i * angle.cos();
            let q = v * i * angle.sin();
            [v, i, theta, delta, p, q]
        })
        .collect()
}

/// Generates a clean series, then perturbs each channel with
/// `N(0, noise_std)` from an independent stream.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<MeasurementSeries> {
    config.validate()?;
    let clean = clean_values(config);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(config.seed);
    noise_rng.set_stream(2);
    let noise = (config.noise_std > 0.0)
        .then(|| Normal::new(0.0, config.noise_std).expect("validated std"));
    let records = clean
        .into_iter()
        .enumerate()
        .map(|(t, mut values)| {
            if let Some(dist) = &noise {
                for v in &mut values {
                    *v += dist.sample(&mut noise_rng);
                }
            }
            MeasurementRecord::from_values(t as i64, values)
        })
        .collect();
    MeasurementSeries::new(records, config.samples_per_day as f64, Source::Synthetic)
}

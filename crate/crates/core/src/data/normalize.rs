use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::record::{Channel, MeasurementSeries, CHANNELS};
use crate::error::{Error, Result};

/// Per-channel min/max for the affine map onto `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub min: [f64; CHANNELS],
    pub max: [f64; CHANNELS],
}

impl NormalizationParams {
    pub fn new(min: [f64; CHANNELS], max: [f64; CHANNELS]) -> Result<Self> {
        for ch in Channel::ALL {
            let k = ch.index();
            if !(max[k] > min[k]) || !min[k].is_finite() || !max[k].is_finite() {
                return Err(Error::Normalization {
                    channel: ch.name().into(),
                    reason: format!("min {} must be finite and below max {}", min[k], max[k]),
                });
            }
        }
        Ok(Self { min, max })
    }

    /// d(physical)/d(normalized) for a channel.
    #[inline]
    pub fn half_range(&self, k: usize) -> f64 {
        0.5 * (self.max[k] - self.min[k])
    }

    #[inline]
    pub fn normalize_value(&self, k: usize, x: f64) -> f64 {
        2.0 * (x - self.min[k]) / (self.max[k] - self.min[k]) - 1.0
    }

    #[inline]
    pub fn denormalize_value(&self, k: usize, z: f64) -> f64 {
        self.min[k] + (z + 1.0) * self.half_range(k)
    }
}

/// Fits min/max over `fit_range` only.
pub fn fit_normalizer(series: &MeasurementSeries, fit_range: Range<usize>) -> Result<NormalizationParams> {
    if fit_range.is_empty() || fit_range.end > series.len() {
        return Err(Error::Config(format!(
            "fit range {fit_range:?} is empty or exceeds series length {}",
            series.len()
        )));
    }
    let mut min = [f64::INFINITY; CHANNELS];
    let mut max = [f64::NEG_INFINITY; CHANNELS];
    for r in &series.records[fit_range] {
        for (k, v) in r.values().into_iter().enumerate() {
            min[k] = min[k].min(v);
            max[k] = max[k].max(v);
        }
    }
    for ch in Channel::ALL {
        if min[ch.index()] == max[ch.index()] {
            return Err(Error::Normalization {
                channel: ch.name().into(),
                reason: "channel is constant over the fit range".into(),
            });
        }
    }
    NormalizationParams::new(min, max)
}

/// A series mapped into normalized units, row-major `len × 6`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSeries {
    pub timestamps: Vec<i64>,
    pub values: Vec<f64>,
    pub params: NormalizationParams,
}

impl NormalizedSeries {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }
}

/// `x ↦ 2(x − min)/(max − min) − 1`, without clipping.
pub fn normalize(series: &MeasurementSeries, params: &NormalizationParams) -> NormalizedSeries {
    let values = series
        .records
        .iter()
        .flat_map(|r| {
            let v = r.values();
            (0..CHANNELS).map(move |k| params.normalize_value(k, v[k]))
        })
        .collect();
    NormalizedSeries {
        timestamps: series.records.iter().map(|r| r.timestamp).collect(),
        values,
        params: *params,
    }
}

/// Inverse of [`normalize`] on row-major `rows × 6` values.
pub fn denormalize(values: &[f64], params: &NormalizationParams) -> Vec<f64> {
    values
        .iter()
        .enumerate()
        .map(|(n, &z)| params.denormalize_value(n % CHANNELS, z))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::record::{MeasurementRecord, Source};
    use proptest::prelude::*;

    fn series_from(rows: &[[f64; 6]]) -> MeasurementSeries {
        let records = rows
            .iter()
            .enumerate()
            .map(|(t, v)| MeasurementRecord::from_values(t as i64, *v))
            .collect();
        MeasurementSeries::new(records, 1.0, Source::Csv).unwrap()
    }

    fn ramp_rows(values: &[f64]) -> Vec<[f64; 6]> {
        values
            .iter()
            .map(|&x| [x, x + 1.0, x * 2.0, -x, x + 3.0, 4.0 - x])
            .collect()
    }

    #[test]
    fn fit_and_map_hand_example() {
        let s = series_from(&ramp_rows(&[0.0, 5.0, 10.0]));
        let p = fit_normalizer(&s, 0..3).unwrap();
        assert_eq!((p.min[0], p.max[0]), (0.0, 10.0));
        let n = normalize(&s, &p);
        let v: Vec<f64> = n.values.chunks(6).map(|r| r[0]).collect();
        assert_eq!(v, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn fit_range_excludes_later_values() {
        let s = series_from(&ramp_rows(&[0.0, 5.0, 10.0, 20.0]));
        let p = fit_normalizer(&s, 0..3).unwrap();
        let n = normalize(&s, &p);
        assert_eq!(n.values[18], 3.0);
    }

    #[test]
    fn constant_channel_rejected() {
        let rows = vec![[1.0, 1.0, 0.0, 0.0, 1.0, 0.0], [2.0, 1.0, 0.1, 0.1, 2.0, 0.1], [3.0, 1.0, 0.2, 0.2, 3.0, 0.2]];
        match fit_normalizer(&series_from(&rows), 0..3) {
            Err(Error::Normalization { channel, .. }) => assert_eq!(channel, "I"),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn round_trip_within_1e12(
            xs in proptest::collection::vec(-50.0f64..50.0, 6..60),
            lo in -10.0f64..0.0,
            span in 0.01f64..20.0,
        ) {
            let p = NormalizationParams::new([lo; 6], [lo + span; 6]).unwrap();
            let back = denormalize(
                &xs.iter().enumerate().map(|(n, &x)| p.normalize_value(n % 6, x)).collect::<Vec<_>>(),
                &p,
            );
            for (x, y) in xs.iter().zip(&back) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
        }

        #[test]
        fn fit_range_maps_into_unit_box_with_endpoints(
            values in proptest::collection::vec(-5.0f64..5.0, 3..40),
        ) {
            prop_assume!(values.iter().any(|&v| v != values[0]));
            let s = series_from(&ramp_rows(&values));
            let p = fit_normalizer(&s, 0..s.len()).unwrap();
            let n = normalize(&s, &p);
            for k in 0..6 {
                let col: Vec<f64> = n.values.iter().skip(k).step_by(6).copied().collect();
                prop_assert!(col.iter().all(|&z| (-1.0..=1.0).contains(&z)));
                prop_assert!(col.contains(&-1.0));
                prop_assert!(col.contains(&1.0));
            }
        }
    }
}

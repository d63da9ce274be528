use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::record::MeasurementSeries;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.7,
            val: 0.1,
            test: 0.2,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::Config(format!("split ratios {parts:?} must lie in [0, 1]")));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split ratios sum to {sum}, not 1")));
        }
        Ok(())
    }

    /// Contiguous index ranges for a series of `len` samples.
    pub fn ranges(&self, len: usize) -> Result<[Range<usize>; 3]> {
        self.validate()?;
        let train = ((len as f64 * self.train).round() as usize).min(len);
        let val = ((len as f64 * self.val).round() as usize).min(len - train);
        Ok([0..train, train..train + val, train + val..len])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: MeasurementSeries,
    pub validation: MeasurementSeries,
    pub test: MeasurementSeries,
    pub ranges: [Range<usize>; 3],
}

/// Chronological train/validation/test partition; no shuffling.
pub fn split_series(series: &MeasurementSeries, ratios: &SplitRatios) -> Result<Split> {
    let ranges = ratios.ranges(series.len())?;
    Ok(Split {
        train: series.slice(ranges[0].clone()),
        validation: series.slice(ranges[1].clone()),
        test: series.slice(ranges[2].clone()),
        ranges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::record::{MeasurementRecord, Source};

    fn series(len: usize) -> MeasurementSeries {
        let records = (0..len)
            .map(|t| MeasurementRecord::from_values(t as i64, [t as f64; 6]))
            .collect();
        MeasurementSeries::new(records, 1.0, Source::Synthetic).unwrap()
    }

    #[test]
    fn full_length_split_sizes() {
        let s = split_series(&series(10080), &SplitRatios::default()).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (7056, 1008, 2016));
    }

    #[test]
    fn small_split_and_partition() {
        let full = series(10);
        let s = split_series(&full, &SplitRatios { train: 0.5, val: 0.2, test: 0.3 }).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (5, 2, 3));
        let joined: Vec<_> = [&s.train, &s.validation, &s.test]
            .iter()
            .flat_map(|p| p.records.clone())
            .collect();
        assert_eq!(joined, full.records);
    }

    #[test]
    fn ratios_must_sum_to_one() {
        let bad = SplitRatios { train: 0.7, val: 0.1, test: 0.1 };
        assert!(matches!(split_series(&series(10), &bad), Err(Error::Config(_))));
    }
}

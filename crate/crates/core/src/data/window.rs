use super::normalize::{NormalizationParams, NormalizedSeries};
use super::record::CHANNELS;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Rolling `window × 6` views over a normalized series.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    data: Vec<f64>,
    timestamps: Vec<i64>,
    window: usize,
    step: usize,
    origins: Vec<usize>,
    params: NormalizationParams,
}

/// `floor((m − window)/step) + 1`, or 0 when the series is too short.
pub fn window_count(len: usize, window: usize, step: usize) -> usize {
    if window == 0 || step == 0 || window > len {
        0
    } else {
        (len - window) / step + 1
    }
}

pub fn make_windows(series: &NormalizedSeries, window: usize, step: usize) -> Result<WindowedDataset> {
    if window == 0 || step == 0 {
        return Err(Error::Config(format!("window {window} and step {step} must be positive")));
    }
    if window > series.len() {
        return Err(Error::Config(format!(
            "window size {window} exceeds series length {}",
            series.len()
        )));
    }
    let origins = (0..window_count(series.len(), window, step)).map(|k| k * step).collect();
    Ok(WindowedDataset {
        data: series.values.clone(),
        timestamps: series.timestamps.clone(),
        window,
        step,
        origins,
        params: series.params,
    })
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.origins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origins.is_empty()
    }

    pub fn window_size(&self) -> usize {
        self.window
    }

    pub fn step(&self) -> usize {
        self.step
    }

    /// Number of underlying samples.
    pub fn series_len(&self) -> usize {
        self.timestamps.len()
    }

    /// Position of each window's first sample in the underlying series.
    pub fn origins(&self) -> &[usize] {
        &self.origins
    }

    pub fn origin_timestamp(&self, k: usize) -> i64 {
        self.timestamps[self.origins[k]]
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn params(&self) -> &NormalizationParams {
        &self.params
    }

    /// Row-major normalized values of the underlying series.
    pub fn series_values(&self) -> &[f64] {
        &self.data
    }

    /// Row-major `window × 6` slice of window `k`.
    pub fn window(&self, k: usize) -> &[f64] {
        let start = self.origins[k] * CHANNELS;
        &self.data[start..start + self.window * CHANNELS]
    }

    pub fn window_tensor(&self, k: usize) -> Tensor {
        Tensor::new(vec![self.window, CHANNELS], self.window(k).to_vec()).expect("window shape")
    }

    /// Copies the listed windows into one contiguous batch buffer.
    pub fn gather(&self, indices: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(indices.len() * self.window * CHANNELS);
        for &k in indices {
            out.extend_from_slice(self.window(k));
        }
        out
    }
}

//! Shared fixtures for the criterion benchmarks.

use piconvae_core::data::{fit_normalizer, generate_synthetic, make_windows, normalize, MeasurementSeries, SyntheticConfig, WindowedDataset};

/// A synthetic series and its unit-step windows, normalized on the whole series.
pub fn windows(len: usize, window: usize, seed: u64) -> (MeasurementSeries, WindowedDataset) {
    let series = generate_synthetic(&SyntheticConfig::new(len, seed, 0.001)).expect("synthetic series");
    let params = fit_normalizer(&series, 0..len).expect("normalizer");
    let ds = make_windows(&normalize(&series, &params), window, 1).expect("windows");
    (series, ds)
}

/// The first `n` windows, concatenated.
pub fn leading_batch(ds: &WindowedDataset, n: usize) -> Vec<f64> {
    ds.gather(&(0..n).collect::<Vec<_>>())
}

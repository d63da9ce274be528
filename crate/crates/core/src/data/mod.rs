//! Measurement series: synthesis, CSV ingestion, normalization, splits
//! and rolling windows.

pub mod csv_io;
pub mod normalize;
pub mod record;
pub mod split;
pub mod synthetic;
pub mod window;

pub use csv_io::{ingest_csv, read_csv, write_csv, ColumnMap, Ingested, PerUnitBase};
pub use normalize::{denormalize, fit_normalizer, normalize, NormalizationParams, NormalizedSeries};
pub use record::{Channel, MeasurementRecord, MeasurementSeries, Source, CHANNELS};
pub use split::{split_series, Split, SplitRatios};
pub use synthetic::{generate_synthetic, SyntheticConfig};
pub use window::{make_windows, window_count, WindowedDataset};

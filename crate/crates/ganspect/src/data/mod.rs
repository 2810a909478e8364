//! Series ingestion, normalization, sliding windows, and window labels.
//!
//! Series files are CSV with a `timestamp,value` header and timestamps in
//! `YYYY-MM-DD HH:MM:SS` format. Anomaly labels come from a JSON document
//! mapping a dataset key to a list of `[begin, end]` timestamp pairs (the
//! combined-windows layout used by the NAB collection).

mod labels;
mod series;
mod windows;

pub use labels::{load_labels, load_labels_str, AnomalySpan};
pub use series::{load_series, parse_timestamp, write_series_csv, TimeSeries};
pub use windows::{
    label_windows, normalize, sliding_windows, write_window_csv, NormalizationParams, Window,
    WindowLabels, WindowSet,
};

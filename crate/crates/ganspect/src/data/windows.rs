use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::data::labels::AnomalySpan;
use crate::data::series::TimeSeries;
use crate::error::{Error, Result};
use crate::nn::Tensor;

/// Linear map parameters taking a series into [-1, 1].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub min: f64,
    pub max: f64,
}

impl NormalizationParams {
    pub fn apply(&self, v: f64) -> f64 {
        2.0 * (v - self.min) / (self.max - self.min) - 1.0
    }

    pub fn invert(&self, v: f64) -> f64 {
        (v + 1.0) / 2.0 * (self.max - self.min) + self.min
    }
}

/// Map a series linearly onto [-1, 1], keeping the parameters for the
/// inverse. Fails on constant series.
pub fn normalize(series: &TimeSeries) -> Result<(TimeSeries, NormalizationParams)> {
    let values = series.values();
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return Err(Error::Data(format!(
            "series {:?} is constant (min == max == {min}); cannot normalize",
            series.name
        )));
    }
    let params = NormalizationParams { min, max };
    let points = series
        .points
        .iter()
        .map(|&(t, v)| (t, params.apply(v)))
        .collect();
    Ok((
        TimeSeries {
            name: series.name.clone(),
            points,
        },
        params,
    ))
}

/// One fixed-length subsequence of a series.
#[derive(Clone, Debug)]
pub struct Window {
    pub start_index: usize,
    pub values: Tensor,
    pub start_time: NaiveDateTime,
    pub end_time: NaiveDateTime,
}

/// All windows cut from one series with a fixed length and stride.
#[derive(Clone, Debug)]
pub struct WindowSet {
    pub windows: Vec<Window>,
    pub source_name: String,
    pub window_len: usize,
    pub stride: usize,
    pub normalization: Option<NormalizationParams>,
}

impl WindowSet {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }
}

/// Per-window binary anomaly flags, aligned with a `WindowSet`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowLabels(pub Vec<bool>);

impl WindowLabels {
    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }
}

/// Cut sliding windows. Window count is floor((len - window_len) / stride) + 1.
pub fn sliding_windows(series: &TimeSeries, window_len: usize, stride: usize) -> Result<WindowSet> {
    if window_len == 0 || stride == 0 {
        return Err(Error::Argument(format!(
            "window length and stride must be positive, got {window_len} and {stride}"
        )));
    }
    let n = series.len();
    if n < window_len {
        return Err(Error::Data(format!(
            "series {:?} has {n} points, shorter than window length {window_len}",
            series.name
        )));
    }
    let count = (n - window_len) / stride + 1;
    let mut windows = Vec::with_capacity(count);
    for w in 0..count {
        let start = w * stride;
        let slice = &series.points[start..start + window_len];
        windows.push(Window {
            start_index: start,
            values: Tensor::column(&slice.iter().map(|&(_, v)| v).collect::<Vec<_>>()),
            start_time: slice[0].0,
            end_time: slice[window_len - 1].0,
        });
    }
    Ok(WindowSet {
        windows,
        source_name: series.name.clone(),
        window_len,
        stride,
        normalization: None,
    })
}

/// Flag each window that overlaps (closed intervals) any anomaly span.
pub fn label_windows(window_set: &WindowSet, spans: &[AnomalySpan]) -> WindowLabels {
    WindowLabels(
        window_set
            .windows
            .iter()
            .map(|w| spans.iter().any(|s| s.overlaps(w.start_time, w.end_time)))
            .collect(),
    )
}

/// Debug export: one row per window with its span label if provided.
pub fn write_window_csv(
    window_set: &WindowSet,
    labels: Option<&WindowLabels>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    if let Some(l) = labels {
        if l.0.len() != window_set.len() {
            return Err(Error::Argument(format!(
                "{} labels for {} windows",
                l.0.len(),
                window_set.len()
            )));
        }
    }
    let mut out = String::from("start_index,start_time,end_time,label\n");
    for (i, w) in window_set.windows.iter().enumerate() {
        let label = labels.map(|l| if l.0[i] { "1" } else { "0" }).unwrap_or("");
        out.push_str(&format!(
            "{},{},{},{}\n",
            w.start_index,
            w.start_time.format(super::series::TIMESTAMP_FORMAT),
            w.end_time.format(super::series::TIMESTAMP_FORMAT),
            label
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::series::parse_timestamp;
    use chrono::Duration;

    pub(crate) fn series_of(values: &[f64]) -> TimeSeries {
        let t0 = parse_timestamp("2024-01-01 00:00:00").unwrap();
        TimeSeries::new(
            "test",
            values
                .iter()
                .enumerate()
                .map(|(i, &v)| (t0 + Duration::minutes(i as i64), v))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn normalize_maps_to_unit_interval() {
        let s = series_of(&[0.0, 5.0, 10.0]);
        let (n, p) = normalize(&s).unwrap();
        assert_eq!(n.values(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(p, NormalizationParams { min: 0.0, max: 10.0 });
    }

    #[test]
    fn normalize_is_identity_on_unit_range() {
        let s = series_of(&[-1.0, 0.25, 1.0]);
        let (n, _) = normalize(&s).unwrap();
        assert_eq!(n.values(), vec![-1.0, 0.25, 1.0]);
    }

    #[test]
    fn normalize_round_trip() {
        let s = series_of(&[3.0, -7.5, 12.25, 0.125]);
        let (n, p) = normalize(&s).unwrap();
        for ((_, orig), (_, norm)) in s.points.iter().zip(&n.points) {
            assert!((p.invert(*norm) - orig).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_series_rejected() {
        let s = series_of(&[2.0, 2.0, 2.0]);
        assert!(normalize(&s).is_err());
    }

    #[test]
    fn window_counts() {
        let s = series_of(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let ws = sliding_windows(&s, 3, 1).unwrap();
        assert_eq!(ws.len(), 3);
        assert_eq!(
            ws.windows.iter().map(|w| w.start_index).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );

        let long = series_of(&(0..1000).map(f64::from).collect::<Vec<_>>());
        assert_eq!(sliding_windows(&long, 60, 1).unwrap().len(), 941);
        assert_eq!(sliding_windows(&long, 60, 60).unwrap().len(), 16);
    }

    #[test]
    fn short_series_is_data_error() {
        let s = series_of(&[1.0, 2.0]);
        assert!(matches!(sliding_windows(&s, 3, 1), Err(Error::Data(_))));
    }

    #[test]
    fn stride_one_windows_reassemble_series() {
        let values: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let s = series_of(&values);
        let ws = sliding_windows(&s, 7, 1).unwrap();
        let mut rebuilt: Vec<f64> = ws.windows.iter().map(|w| w.values.as_slice()[0]).collect();
        rebuilt.extend_from_slice(&ws.windows.last().unwrap().values.as_slice()[1..]);
        assert_eq!(rebuilt, values);
    }

    #[test]
    fn label_overlap_rules() {
        let s = series_of(&(0..100).map(f64::from).collect::<Vec<_>>());
        let ws = sliding_windows(&s, 61, 1).unwrap();
        let w = &ws.windows[10]; // covers minutes 10..=70
        let t = |m: i64| parse_timestamp("2024-01-01 00:00:00").unwrap() + Duration::minutes(m);

        let overlapping = AnomalySpan::new(t(50), t(90)).unwrap();
        let disjoint = AnomalySpan::new(t(80), t(90)).unwrap();
        let exact = AnomalySpan::new(w.start_time, w.end_time).unwrap();

        assert!(overlapping.overlaps(w.start_time, w.end_time));
        assert!(!disjoint.overlaps(w.start_time, w.end_time));
        assert!(exact.overlaps(w.start_time, w.end_time));

        let labels = label_windows(&ws, &[overlapping]);
        assert!(labels.0[10]);
    }

    #[test]
    fn labels_monotone_under_span_growth() {
        let s = series_of(&(0..40).map(f64::from).collect::<Vec<_>>());
        let ws = sliding_windows(&s, 5, 2).unwrap();
        let t = |m: i64| parse_timestamp("2024-01-01 00:00:00").unwrap() + Duration::minutes(m);
        let small = AnomalySpan::new(t(12), t(14)).unwrap();
        let grown = AnomalySpan::new(t(8), t(20)).unwrap();
        let before = label_windows(&ws, &[small]);
        let after = label_windows(&ws, &[grown]);
        for (b, a) in before.0.iter().zip(&after.0) {
            assert!(!b || *a, "enlarging a span must never clear a label");
        }
    }
}

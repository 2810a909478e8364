//! Per-window anomaly scores and their CSV representation.

use std::path::Path;

use chrono::NaiveDateTime;

use crate::data::parse_timestamp;
use crate::error::{Error, Result};

const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

/// Score for one window. The residual/discrimination components are present
/// only for the reconstruction-based detector.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreRow {
    pub start_index: usize,
    pub start_time: NaiveDateTime,
    pub end_time: NaiveDateTime,
    pub residual: Option<f64>,
    pub discrimination: Option<f64>,
    pub score: f64,
}

/// Ordered per-window scores from one detector on one dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct AnomalyScoreSeries {
    pub detector: String,
    pub rows: Vec<ScoreRow>,
}

impl AnomalyScoreSeries {
    pub fn scores(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.score).collect()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// CSV with columns start_index, start_time, end_time, residual_loss,
    /// discrimination_loss, anomaly_score. With `with_detector_column` a
    /// leading `model` column names the detector on every row.
    pub fn to_csv(&self, with_detector_column: bool) -> String {
        let mut out = String::new();
        if with_detector_column {
            out.push_str("model,");
        }
        out.push_str("start_index,start_time,end_time,residual_loss,discrimination_loss,anomaly_score\n");
        let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            if with_detector_column {
                out.push_str(&self.detector);
                out.push(',');
            }
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.start_index,
                r.start_time.format(TIMESTAMP_FORMAT),
                r.end_time.format(TIMESTAMP_FORMAT),
                fmt_opt(r.residual),
                fmt_opt(r.discrimination),
                r.score
            ));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>, with_detector_column: bool) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv(with_detector_column)).map_err(|e| Error::io(path, e))
    }

    /// Parse a CSV produced by [`AnomalyScoreSeries::to_csv`], either layout.
    pub fn from_csv(text: &str, fallback_detector: &str) -> Result<AnomalyScoreSeries> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Data("score csv: empty file".into()))?;
        let has_model = header.starts_with("model,");
        let expected = if has_model {
            "model,start_index,start_time,end_time,residual_loss,discrimination_loss,anomaly_score"
        } else {
            "start_index,start_time,end_time,residual_loss,discrimination_loss,anomaly_score"
        };
        if header.trim() != expected {
            return Err(Error::Data(format!("score csv: unexpected header {header:?}")));
        }
        let mut detector = fallback_detector.to_string();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let want = if has_model { 7 } else { 6 };
            if fields.len() != want {
                return Err(Error::Data(format!(
                    "score csv row {}: expected {want} fields, got {}",
                    i + 2,
                    fields.len()
                )));
            }
            let mut f = fields.into_iter();
            if has_model {
                detector = f.next().unwrap().to_string();
            }
            let start_index: usize = f
                .next()
                .unwrap()
                .parse()
                .map_err(|_| Error::Data(format!("score csv row {}: bad start_index", i + 2)))?;
            let start_time = parse_timestamp(f.next().unwrap())?;
            let end_time = parse_timestamp(f.next().unwrap())?;
            let parse_opt = |s: &str| -> Result<Option<f64>> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse()
                        .map(Some)
                        .map_err(|_| Error::Data(format!("score csv row {}: bad number {s:?}", i + 2)))
                }
            };
            let residual = parse_opt(f.next().unwrap())?;
            let discrimination = parse_opt(f.next().unwrap())?;
            let score: f64 = f
                .next()
                .unwrap()
                .parse()
                .map_err(|_| Error::Data(format!("score csv row {}: bad anomaly_score", i + 2)))?;
            rows.push(ScoreRow {
                start_index,
                start_time,
                end_time,
                residual,
                discrimination,
                score,
            });
        }
        Ok(AnomalyScoreSeries { detector, rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> AnomalyScoreSeries {
        let t = |s: &str| parse_timestamp(s).unwrap();
        AnomalyScoreSeries {
            detector: "gan".into(),
            rows: vec![
                ScoreRow {
                    start_index: 0,
                    start_time: t("2024-01-01 00:00:00"),
                    end_time: t("2024-01-01 00:59:00"),
                    residual: Some(1.25),
                    discrimination: Some(0.5),
                    score: 1.175,
                },
                ScoreRow {
                    start_index: 60,
                    start_time: t("2024-01-01 01:00:00"),
                    end_time: t("2024-01-01 01:59:00"),
                    residual: None,
                    discrimination: None,
                    score: 0.25,
                },
            ],
        }
    }

    #[test]
    fn csv_round_trip_both_layouts() {
        let s = sample();
        for with_model in [false, true] {
            let csv = s.to_csv(with_model);
            let back = AnomalyScoreSeries::from_csv(&csv, "gan").unwrap();
            assert_eq!(s, back);
        }
    }
}

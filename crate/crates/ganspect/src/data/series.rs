use std::path::Path;

use chrono::NaiveDateTime;

use crate::error::{Error, Result};

pub(crate) const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

/// Ordered (timestamp, value) samples for one dataset.
///
/// Invariants: timestamps strictly increasing, at least two points, all
/// values finite.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub name: String,
    pub points: Vec<(NaiveDateTime, f64)>,
}

impl TimeSeries {
    pub fn new(name: impl Into<String>, points: Vec<(NaiveDateTime, f64)>) -> Result<TimeSeries> {
        let series = TimeSeries {
            name: name.into(),
            points,
        };
        series.check_invariants()?;
        Ok(series)
    }

    fn check_invariants(&self) -> Result<()> {
        if self.points.len() < 2 {
            return Err(Error::Data(format!(
                "series {:?} has {} points, need at least 2",
                self.name,
                self.points.len()
            )));
        }
        for (i, w) in self.points.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(Error::Data(format!(
                    "series {:?}: timestamps not strictly increasing at row {} ({} then {})",
                    self.name,
                    i + 2,
                    w[0].0,
                    w[1].0
                )));
            }
        }
        if let Some((t, v)) = self.points.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Data(format!(
                "series {:?}: non-finite value {v} at {t}",
                self.name
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|&(_, v)| v).collect()
    }

    pub fn timestamps(&self) -> Vec<NaiveDateTime> {
        self.points.iter().map(|&(t, _)| t).collect()
    }
}

/// Parse `YYYY-MM-DD HH:MM:SS`, tolerating a fractional-second suffix.
pub fn parse_timestamp(s: &str) -> Result<NaiveDateTime> {
    let trimmed = s.trim();
    NaiveDateTime::parse_from_str(trimmed, TIMESTAMP_FORMAT)
        .or_else(|_| NaiveDateTime::parse_from_str(trimmed, "%Y-%m-%d %H:%M:%S%.f"))
        .map_err(|e| Error::Data(format!("cannot parse timestamp {trimmed:?}: {e}")))
}

/// Load a `timestamp,value` CSV. The dataset name is the file stem.
pub fn load_series(path: impl AsRef<Path>) -> Result<TimeSeries> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    parse_series_csv(&name, &text)
}

pub(crate) fn parse_series_csv(name: &str, text: &str) -> Result<TimeSeries> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((_, l)) => break l,
            None => return Err(Error::Data(format!("series {name:?}: empty file"))),
        }
    };
    let header_fields: Vec<&str> = header.split(',').map(str::trim).collect();
    if header_fields != ["timestamp", "value"] {
        return Err(Error::Data(format!(
            "series {name:?}: expected header \"timestamp,value\", got {header:?}"
        )));
    }

    let mut points = Vec::new();
    for (lineno, line) in lines {
        let row = lineno + 1; // 1-based, including header line
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.splitn(2, ',');
        let ts_field = fields.next().unwrap_or("");
        let value_field = fields
            .next()
            .ok_or_else(|| Error::Data(format!("series {name:?} row {row}: missing value column")))?
            .trim();
        let t = parse_timestamp(ts_field)
            .map_err(|e| Error::Data(format!("series {name:?} row {row}: {e}")))?;
        if value_field.is_empty() {
            return Err(Error::Data(format!(
                "series {name:?} row {row}: blank value"
            )));
        }
        let v: f64 = value_field.parse().map_err(|_| {
            Error::Data(format!(
                "series {name:?} row {row}: cannot parse value {value_field:?}"
            ))
        })?;
        if !v.is_finite() {
            return Err(Error::Data(format!(
                "series {name:?} row {row}: non-finite value {value_field:?}"
            )));
        }
        if let Some(&(prev, _)) = points.last() {
            if t <= prev {
                return Err(Error::Data(format!(
                    "series {name:?} row {row}: timestamp {t} not after previous {prev}"
                )));
            }
        }
        points.push((t, v));
    }
    TimeSeries::new(name, points)
}

/// Write a series in the same CSV format `load_series` reads.
pub fn write_series_csv(series: &TimeSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("timestamp,value\n");
    for (t, v) in &series.points {
        out.push_str(&format!("{},{}\n", t.format(TIMESTAMP_FORMAT), v));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

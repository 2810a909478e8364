use std::path::Path;

use chrono::NaiveDateTime;

use crate::data::series::parse_timestamp;
use crate::error::{Error, Result};

/// One labelled anomaly time span, inclusive on both ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AnomalySpan {
    pub begin: NaiveDateTime,
    pub end: NaiveDateTime,
}

impl AnomalySpan {
    pub fn new(begin: NaiveDateTime, end: NaiveDateTime) -> Result<AnomalySpan> {
        if begin > end {
            return Err(Error::Data(format!(
                "anomaly span begins {begin} after it ends {end}"
            )));
        }
        Ok(AnomalySpan { begin, end })
    }

    /// Closed-interval overlap with [start, end].
    pub fn overlaps(&self, start: NaiveDateTime, end: NaiveDateTime) -> bool {
        self.begin <= end && start <= self.end
    }
}

/// Load the spans for one dataset key from a combined-windows label document:
/// a JSON object mapping dataset keys to lists of `[begin, end]` pairs.
pub fn load_labels(path: impl AsRef<Path>, dataset_key: &str) -> Result<Vec<AnomalySpan>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_labels_str(&text, dataset_key)
}

pub fn load_labels_str(text: &str, dataset_key: &str) -> Result<Vec<AnomalySpan>> {
    let doc: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Error::Data(format!("label document is not valid JSON: {e}")))?;
    let map = doc
        .as_object()
        .ok_or_else(|| Error::Data("label document root must be an object".into()))?;
    let entry = map.get(dataset_key).ok_or_else(|| {
        let mut keys: Vec<&str> = map.keys().map(String::as_str).collect();
        keys.sort_unstable();
        Error::Data(format!(
            "dataset key {dataset_key:?} not in label document; available keys: {}",
            keys.join(", ")
        ))
    })?;
    let list = entry.as_array().ok_or_else(|| {
        Error::Data(format!("labels for {dataset_key:?} must be a list of pairs"))
    })?;

    let mut spans = Vec::with_capacity(list.len());
    for (i, pair) in list.iter().enumerate() {
        let pair = pair.as_array().filter(|p| p.len() == 2).ok_or_else(|| {
            Error::Data(format!(
                "labels for {dataset_key:?}: entry {i} is not a [begin, end] pair"
            ))
        })?;
        let ts = |v: &serde_json::Value| -> Result<NaiveDateTime> {
            let s = v.as_str().ok_or_else(|| {
                Error::Data(format!(
                    "labels for {dataset_key:?}: entry {i} holds a non-string timestamp"
                ))
            })?;
            parse_timestamp(s)
        };
        spans.push(AnomalySpan::new(ts(&pair[0])?, ts(&pair[1])?)?);
    }
    spans.sort_by_key(|s| s.begin);
    Ok(spans)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"{
        "realKnownCause/machine.csv": [
            ["2024-02-01 10:00:00.000000", "2024-02-01 12:00:00.000000"],
            ["2024-01-05 00:00:00", "2024-01-06 00:00:00"]
        ],
        "empty/none.csv": []
    }"#;

    #[test]
    fn loads_and_sorts_spans() {
        let spans = load_labels_str(DOC, "realKnownCause/machine.csv").unwrap();
        assert_eq!(spans.len(), 2);
        assert!(spans[0].begin < spans[1].begin);
    }

    #[test]
    fn empty_list_is_not_an_error() {
        let spans = load_labels_str(DOC, "empty/none.csv").unwrap();
        assert!(spans.is_empty());
    }

    #[test]
    fn missing_key_lists_available() {
        let err = load_labels_str(DOC, "nope.csv").unwrap_err().to_string();
        assert!(err.contains("empty/none.csv"));
        assert!(err.contains("realKnownCause/machine.csv"));
    }

    #[test]
    fn inverted_span_rejected() {
        let doc = r#"{"k": [["2024-01-02 00:00:00", "2024-01-01 00:00:00"]]}"#;
        assert!(load_labels_str(doc, "k").is_err());
    }

    #[test]
    fn overlap_is_closed_on_both_sides() {
        let span = AnomalySpan::new(
            parse_timestamp("2024-01-01 00:00:00").unwrap(),
            parse_timestamp("2024-01-02 00:00:00").unwrap(),
        )
        .unwrap();
        // Touching at a single boundary instant counts.
        assert!(span.overlaps(
            parse_timestamp("2024-01-02 00:00:00").unwrap(),
            parse_timestamp("2024-01-03 00:00:00").unwrap()
        ));
        assert!(!span.overlaps(
            parse_timestamp("2024-01-02 00:00:01").unwrap(),
            parse_timestamp("2024-01-03 00:00:00").unwrap()
        ));
    }
}

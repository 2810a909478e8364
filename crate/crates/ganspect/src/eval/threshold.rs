use crate::error::{Error, Result};
use crate::eval::metrics::ConfusionCounts;

/// How to turn scores into binary predictions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThresholdStrategy {
    /// Predict anomalous where score > the q-th empirical quantile
    /// (linear-interpolation quantile, q in [0, 1]).
    Quantile(f64),
    /// Sweep every distinct score as a candidate threshold and keep the one
    /// maximizing F1 against the provided labels; ties go to the lowest
    /// threshold. Requires labels.
    BestF1,
}

/// Parse `quantile:0.99` or `bestf1`.
pub fn parse_threshold_strategy(s: &str) -> Result<ThresholdStrategy> {
    let lower = s.trim().to_ascii_lowercase();
    if lower == "bestf1" {
        return Ok(ThresholdStrategy::BestF1);
    }
    if let Some(q) = lower.strip_prefix("quantile:") {
        let q: f64 = q
            .parse()
            .map_err(|_| Error::Argument(format!("bad quantile in threshold strategy {s:?}")))?;
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Argument(format!("quantile must lie in [0, 1], got {q}")));
        }
        return Ok(ThresholdStrategy::Quantile(q));
    }
    Err(Error::Argument(format!(
        "unknown threshold strategy {s:?}; expected \"bestf1\" or \"quantile:Q\""
    )))
}

/// Linear-interpolation empirical quantile of a non-empty slice.
fn quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

fn f1_at(scores: &[f64], labels: &[bool], threshold: f64) -> f64 {
    let preds: Vec<bool> = scores.iter().map(|&s| s > threshold).collect();
    let c = ConfusionCounts::from_predictions(labels, &preds);
    let p_den = c.true_pos + c.false_pos;
    let r_den = c.true_pos + c.false_neg;
    if p_den == 0 || r_den == 0 {
        return 0.0;
    }
    let p = c.true_pos as f64 / p_den as f64;
    let r = c.true_pos as f64 / r_den as f64;
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Apply a strategy to scores. Predictions use strict `score > threshold`.
/// Returns the predictions and the chosen threshold.
pub fn apply_threshold(
    scores: &[f64],
    strategy: ThresholdStrategy,
    labels: Option<&[bool]>,
) -> Result<(Vec<bool>, f64)> {
    if scores.is_empty() {
        return Err(Error::Argument("cannot threshold an empty score list".into()));
    }
    let threshold = match strategy {
        ThresholdStrategy::Quantile(q) => {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::Argument(format!("quantile must lie in [0, 1], got {q}")));
            }
            quantile(scores, q)
        }
        ThresholdStrategy::BestF1 => {
            let labels = labels.ok_or_else(|| {
                Error::Argument("bestf1 thresholding requires ground-truth labels".into())
            })?;
            if labels.len() != scores.len() {
                return Err(Error::Argument(format!(
                    "{} labels for {} scores",
                    labels.len(),
                    scores.len()
                )));
            }
            let mut candidates = scores.to_vec();
            candidates.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
            candidates.dedup();
            let mut best = (f64::NEG_INFINITY, f64::NAN);
            for &cand in &candidates {
                let f1 = f1_at(scores, labels, cand);
                // Strictly-better keeps the lowest threshold on ties.
                if f1 > best.0 {
                    best = (f1, cand);
                }
            }
            best.1
        }
    };
    Ok((scores.iter().map(|&s| s > threshold).collect(), threshold))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_example() {
        let scores = [1.0, 2.0, 3.0, 4.0];
        let (preds, thr) = apply_threshold(&scores, ThresholdStrategy::Quantile(0.75), None).unwrap();
        assert_eq!(preds, vec![false, false, false, true]);
        assert!(thr >= 3.0 && thr < 4.0);
    }

    #[test]
    fn equal_scores_predict_nothing() {
        let scores = [2.0, 2.0, 2.0];
        for q in [0.0, 0.5, 0.99] {
            let (preds, _) = apply_threshold(&scores, ThresholdStrategy::Quantile(q), None).unwrap();
            assert!(preds.iter().all(|&p| !p), "strict > must give all-negative");
        }
    }

    #[test]
    fn best_f1_finds_separating_threshold() {
        let scores = [0.9, 0.8, 0.3];
        let labels = [true, true, false];
        let (preds, thr) = apply_threshold(&scores, ThresholdStrategy::BestF1, Some(&labels)).unwrap();
        assert_eq!(preds, vec![true, true, false]);
        assert!((0.3..0.8).contains(&thr), "threshold {thr}");
        // The resulting F1 is 1.
        assert_eq!(f1_at(&scores, &labels, thr), 1.0);
    }

    #[test]
    fn best_f1_beats_every_candidate() {
        let scores = [0.1, 0.4, 0.4, 0.7, 0.2, 0.9, 0.05];
        let labels = [false, true, false, true, false, true, true];
        let (_, thr) = apply_threshold(&scores, ThresholdStrategy::BestF1, Some(&labels)).unwrap();
        let chosen = f1_at(&scores, &labels, thr);
        for &cand in &scores {
            assert!(chosen >= f1_at(&scores, &labels, cand) - 1e-12);
        }
    }

    #[test]
    fn best_f1_without_labels_is_an_error() {
        assert!(apply_threshold(&[1.0], ThresholdStrategy::BestF1, None).is_err());
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!(parse_threshold_strategy("bestf1").unwrap(), ThresholdStrategy::BestF1);
        assert_eq!(
            parse_threshold_strategy("quantile:0.99").unwrap(),
            ThresholdStrategy::Quantile(0.99)
        );
        assert!(parse_threshold_strategy("quantile:2").is_err());
        assert!(parse_threshold_strategy("p99").is_err());
    }
}

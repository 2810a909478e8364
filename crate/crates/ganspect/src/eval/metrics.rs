use crate::error::{Error, Result};

/// Binary confusion counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

impl ConfusionCounts {
    pub fn from_predictions(y_true: &[bool], y_pred: &[bool]) -> ConfusionCounts {
        let mut c = ConfusionCounts::default();
        for (&t, &p) in y_true.iter().zip(y_pred) {
            match (t, p) {
                (true, true) => c.true_pos += 1,
                (false, true) => c.false_pos += 1,
                (false, false) => c.true_neg += 1,
                (true, false) => c.false_neg += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }
}

/// The six scalar measures.
///
/// Degenerate denominators resolve to fixed values: precision 0 when no
/// positive predictions, recall 0 when no positive labels, F1 0 when
/// precision + recall is 0, kappa 0 when chance agreement is 1, AUC 0.5 when
/// either class is absent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub cohen_kappa: f64,
    pub auc: f64,
}

/// Metrics for one (model, dataset) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub model: String,
    pub dataset: String,
    pub threshold: f64,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Metric {
    Accuracy,
    Precision,
    Recall,
    F1,
    CohenKappa,
    Auc,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Accuracy,
        Metric::Precision,
        Metric::Recall,
        Metric::F1,
        Metric::CohenKappa,
        Metric::Auc,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::F1 => "f1",
            Metric::CohenKappa => "cohen_kappa",
            Metric::Auc => "auc",
        }
    }

    pub fn of(&self, m: &Metrics) -> f64 {
        match self {
            Metric::Accuracy => m.accuracy,
            Metric::Precision => m.precision,
            Metric::Recall => m.recall,
            Metric::F1 => m.f1,
            Metric::CohenKappa => m.cohen_kappa,
            Metric::Auc => m.auc,
        }
    }
}

/// Area under the ROC curve via the trapezoid rule over the tie-grouped
/// curve. Equal to (concordant + 0.5 * tied) / (pos * neg) pair counting.
/// Returns 0.5 when either class is absent.
pub fn auc(scores: &[f64], labels: &[bool]) -> f64 {
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return 0.5;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite scores"));

    let mut area = 0.0;
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut prev_tp = 0usize;
    let mut prev_fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        // Consume the whole group of tied scores at once.
        let score = scores[order[i]];
        while i < order.len() && scores[order[i]] == score {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        // Trapezoid between the previous and current ROC points.
        area += (fp - prev_fp) as f64 * (tp + prev_tp) as f64 / 2.0;
        prev_tp = tp;
        prev_fp = fp;
    }
    area / (pos as f64 * neg as f64)
}

/// Compute all six measures from labels, thresholded predictions, and the
/// raw scores (used for AUC only).
pub fn compute_metrics(y_true: &[bool], y_pred: &[bool], scores: &[f64]) -> Result<Metrics> {
    if y_true.is_empty() {
        return Err(Error::Argument("metrics on empty inputs".into()));
    }
    if y_true.len() != y_pred.len() || y_true.len() != scores.len() {
        return Err(Error::Argument(format!(
            "length mismatch: {} labels, {} predictions, {} scores",
            y_true.len(),
            y_pred.len(),
            scores.len()
        )));
    }
    let c = ConfusionCounts::from_predictions(y_true, y_pred);
    Ok(Metrics {
        accuracy: (c.true_pos + c.true_neg) as f64 / c.total() as f64,
        precision: ratio_or_zero(c.true_pos, c.true_pos + c.false_pos),
        recall: ratio_or_zero(c.true_pos, c.true_pos + c.false_neg),
        f1: f1_from(c),
        cohen_kappa: kappa_from(c),
        auc: auc(scores, y_true),
    })
}

fn ratio_or_zero(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1_from(c: ConfusionCounts) -> f64 {
    let p = ratio_or_zero(c.true_pos, c.true_pos + c.false_pos);
    let r = ratio_or_zero(c.true_pos, c.true_pos + c.false_neg);
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn kappa_from(c: ConfusionCounts) -> f64 {
    let n = c.total() as f64;
    let observed = (c.true_pos + c.true_neg) as f64 / n;
    let pred_pos = (c.true_pos + c.false_pos) as f64;
    let true_pos = (c.true_pos + c.false_neg) as f64;
    let pred_neg = (c.false_neg + c.true_neg) as f64;
    let true_neg = (c.false_pos + c.true_neg) as f64;
    let expected = (pred_pos * true_pos + pred_neg * true_neg) / (n * n);
    if expected == 1.0 {
        0.0
    } else {
        (observed - expected) / (1.0 - expected)
    }
}

impl EvalReport {
    pub fn csv_header() -> &'static str {
        "model,dataset,threshold,accuracy,precision,recall,f1,cohen_kappa,auc"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.model,
            self.dataset,
            self.threshold,
            self.metrics.accuracy,
            self.metrics.precision,
            self.metrics.recall,
            self.metrics.f1,
            self.metrics.cohen_kappa,
            self.metrics.auc
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_confusion_example() {
        let y_true = [true, false, true, false];
        let y_pred = [true, true, true, false];
        let scores = [0.9, 0.8, 0.7, 0.1];
        let m = compute_metrics(&y_true, &y_pred, &scores).unwrap();
        assert!((m.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.recall - 1.0).abs() < 1e-12);
        assert!((m.f1 - 0.8).abs() < 1e-12);
        assert!((m.accuracy - 0.75).abs() < 1e-12);
        assert!((m.cohen_kappa - 0.5).abs() < 1e-12);
    }

    #[test]
    fn perfect_predictions() {
        let y = [true, false, true];
        let scores = [0.9, 0.1, 0.8];
        let m = compute_metrics(&y, &y, &scores).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.precision, 1.0);
        assert_eq!(m.recall, 1.0);
        assert_eq!(m.f1, 1.0);
        assert_eq!(m.cohen_kappa, 1.0);
        assert_eq!(m.auc, 1.0);
    }

    #[test]
    fn auc_perfect_separation() {
        let scores = [0.9, 0.8, 0.3, 0.1];
        let labels = [true, true, false, false];
        assert_eq!(auc(&scores, &labels), 1.0);
    }

    #[test]
    fn auc_handles_ties_and_absent_classes() {
        // All scores tied: every pair is a tie -> 0.5.
        assert_eq!(auc(&[0.5, 0.5, 0.5], &[true, false, true]), 0.5);
        // Absent class -> 0.5 by convention.
        assert_eq!(auc(&[0.1, 0.9], &[true, true]), 0.5);
        assert_eq!(auc(&[0.1, 0.9], &[false, false]), 0.5);
        // Reversed scores -> 0.
        assert_eq!(auc(&[0.1, 0.9], &[true, false]), 0.0);
    }

    #[test]
    fn auc_invariant_under_monotone_transform() {
        let scores = [0.2, 1.5, 0.7, 3.0, 2.2, 0.7];
        let labels = [false, true, false, true, false, true];
        let base = auc(&scores, &labels);
        let squashed: Vec<f64> = scores.iter().map(|&s| (s * 2.0 + 1.0).tanh()).collect();
        assert!((auc(&squashed, &labels) - base).abs() < 1e-12);
    }

    #[test]
    fn degenerate_denominators() {
        // No positive predictions: precision 0; no positive labels: recall 0.
        let m = compute_metrics(&[false, false], &[false, false], &[0.1, 0.2]).unwrap();
        assert_eq!(m.precision, 0.0);
        assert_eq!(m.recall, 0.0);
        assert_eq!(m.f1, 0.0);
        // Full agreement with chance agreement 1 -> kappa 0.
        assert_eq!(m.cohen_kappa, 0.0);
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.auc, 0.5);
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(compute_metrics(&[true], &[true, false], &[0.5, 0.5]).is_err());
        assert!(compute_metrics(&[], &[], &[]).is_err());
    }
}

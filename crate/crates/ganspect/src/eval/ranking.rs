use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::metrics::{EvalReport, Metric};

/// Cross-dataset comparison: per-(model, metric) cumulative rank sums and
/// pairwise F1 win/loss/tie counts.
#[derive(Clone, Debug, PartialEq)]
pub struct RankTable {
    /// (model, metric, rank sum); lower rank sum = better.
    pub rank_sums: Vec<(String, Metric, f64)>,
    /// (model_a, model_b, wins, losses, ties) on F1, one row per unordered pair.
    pub pairwise_f1: Vec<(String, String, usize, usize, usize)>,
}

fn models_and_datasets(reports: &[EvalReport]) -> (Vec<String>, Vec<String>) {
    let models: BTreeSet<&str> = reports.iter().map(|r| r.model.as_str()).collect();
    let datasets: BTreeSet<&str> = reports.iter().map(|r| r.dataset.as_str()).collect();
    (
        models.into_iter().map(String::from).collect(),
        datasets.into_iter().map(String::from).collect(),
    )
}

fn metric_of(reports: &[EvalReport], model: &str, dataset: &str, metric: Metric) -> Option<f64> {
    reports
        .iter()
        .find(|r| r.model == model && r.dataset == dataset)
        .map(|r| metric.of(&r.metrics))
}

fn require_full_coverage(reports: &[EvalReport], models: &[String], datasets: &[String]) -> Result<()> {
    let mut missing = Vec::new();
    for m in models {
        for d in datasets {
            if !reports.iter().any(|r| &r.model == m && &r.dataset == d) {
                missing.push(format!("({m}, {d})"));
            }
        }
    }
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::Argument(format!(
            "missing reports for: {}",
            missing.join(", ")
        )))
    }
}

/// Average-rank assignment for values sorted descending (rank 1 = best).
/// Tied values share the mean of the ranks they span, so ranks per dataset
/// always sum to M(M+1)/2.
fn average_ranks_desc(values: &[f64]) -> Vec<f64> {
    let m = values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).expect("finite metric"));
    let mut ranks = vec![0.0; m];
    let mut i = 0;
    while i < m {
        let mut j = i;
        while j + 1 < m && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) share the mean of ranks i+1..=j+1.
        let mean_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mean_rank;
        }
        i = j + 1;
    }
    ranks
}

/// Rank models per dataset by the metric (descending, average-rank ties) and
/// sum the ranks across datasets. Lower = better. Requires a report for
/// every (model, dataset) cell.
pub fn cumulative_ranking(reports: &[EvalReport], metric: Metric) -> Result<Vec<(String, f64)>> {
    if reports.is_empty() {
        return Err(Error::Argument("no reports to rank".into()));
    }
    let (models, datasets) = models_and_datasets(reports);
    require_full_coverage(reports, &models, &datasets)?;

    let mut sums = vec![0.0; models.len()];
    for d in &datasets {
        let values: Vec<f64> = models
            .iter()
            .map(|m| metric_of(reports, m, d, metric).expect("coverage checked"))
            .collect();
        for (s, r) in sums.iter_mut().zip(average_ranks_desc(&values)) {
            *s += r;
        }
    }
    Ok(models.into_iter().zip(sums).collect())
}

/// Count datasets where model A's metric is greater / smaller / equal to
/// model B's.
pub fn pairwise_wins(
    reports: &[EvalReport],
    model_a: &str,
    model_b: &str,
    metric: Metric,
) -> Result<(usize, usize, usize)> {
    let datasets_a: BTreeSet<&str> = reports
        .iter()
        .filter(|r| r.model == model_a)
        .map(|r| r.dataset.as_str())
        .collect();
    let datasets_b: BTreeSet<&str> = reports
        .iter()
        .filter(|r| r.model == model_b)
        .map(|r| r.dataset.as_str())
        .collect();
    if datasets_a != datasets_b || datasets_a.is_empty() {
        return Err(Error::Argument(format!(
            "models {model_a:?} and {model_b:?} do not cover the same datasets"
        )));
    }
    let mut wins = 0;
    let mut losses = 0;
    let mut ties = 0;
    for d in datasets_a {
        let a = metric_of(reports, model_a, d, metric).expect("covered");
        let b = metric_of(reports, model_b, d, metric).expect("covered");
        if a > b {
            wins += 1;
        } else if a < b {
            losses += 1;
        } else {
            ties += 1;
        }
    }
    Ok((wins, losses, ties))
}

/// Rank sums for every metric plus pairwise F1 comparisons for every
/// unordered model pair.
pub fn build_rank_table(reports: &[EvalReport]) -> Result<RankTable> {
    let (models, _) = models_and_datasets(reports);
    let mut rank_sums = Vec::new();
    for metric in Metric::ALL {
        for (model, sum) in cumulative_ranking(reports, metric)? {
            rank_sums.push((model, metric, sum));
        }
    }
    let mut pairwise_f1 = Vec::new();
    for (i, a) in models.iter().enumerate() {
        for b in &models[i + 1..] {
            let (w, l, t) = pairwise_wins(reports, a, b, Metric::F1)?;
            pairwise_f1.push((a.clone(), b.clone(), w, l, t));
        }
    }
    Ok(RankTable {
        rank_sums,
        pairwise_f1,
    })
}

pub fn write_reports_csv(reports: &[EvalReport], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from(EvalReport::csv_header());
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_rank_sums_csv(table: &RankTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("model,metric,rank_sum\n");
    for (model, metric, sum) in &table.rank_sums {
        out.push_str(&format!("{},{},{}\n", model, metric.name(), sum));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_pairwise_csv(table: &RankTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("model_a,model_b,wins,losses,ties\n");
    for (a, b, w, l, t) in &table.pairwise_f1 {
        out.push_str(&format!("{a},{b},{w},{l},{t}\n"));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::metrics::{ConfusionCounts, Metrics};

    fn report(model: &str, dataset: &str, f1: f64) -> EvalReport {
        EvalReport {
            model: model.into(),
            dataset: dataset.into(),
            threshold: 0.5,
            counts: ConfusionCounts::default(),
            metrics: Metrics {
                accuracy: f1,
                precision: f1,
                recall: f1,
                f1,
                cohen_kappa: f1,
                auc: f1,
            },
        }
    }

    #[test]
    fn dominant_model_gets_minimal_rank_sum() {
        let reports = vec![
            report("a", "d1", 0.9),
            report("a", "d2", 0.8),
            report("a", "d3", 0.7),
            report("b", "d1", 0.5),
            report("b", "d2", 0.4),
            report("b", "d3", 0.3),
        ];
        let sums = cumulative_ranking(&reports, Metric::F1).unwrap();
        assert_eq!(sums, vec![("a".to_string(), 3.0), ("b".to_string(), 6.0)]);
    }

    #[test]
    fn ties_share_average_rank() {
        let reports = vec![
            report("a", "d1", 0.5),
            report("b", "d1", 0.5),
            report("c", "d1", 0.1),
        ];
        let sums = cumulative_ranking(&reports, Metric::F1).unwrap();
        let get = |m: &str| sums.iter().find(|(x, _)| x == m).unwrap().1;
        assert_eq!(get("a"), 1.5);
        assert_eq!(get("b"), 1.5);
        assert_eq!(get("c"), 3.0);
        // Permutation property: ranks sum to M(M+1)/2.
        assert_eq!(get("a") + get("b") + get("c"), 6.0);
    }

    #[test]
    fn single_dataset_matches_plain_ordering() {
        let reports = vec![report("a", "d", 0.2), report("b", "d", 0.9)];
        let sums = cumulative_ranking(&reports, Metric::Auc).unwrap();
        let get = |m: &str| sums.iter().find(|(x, _)| x == m).unwrap().1;
        assert_eq!(get("b"), 1.0);
        assert_eq!(get("a"), 2.0);
    }

    #[test]
    fn missing_cell_is_reported() {
        let reports = vec![report("a", "d1", 0.5), report("b", "d2", 0.5)];
        let err = cumulative_ranking(&reports, Metric::F1).unwrap_err().to_string();
        assert!(err.contains("(a, d2)"), "{err}");
        assert!(err.contains("(b, d1)"), "{err}");
    }

    #[test]
    fn pairwise_counting() {
        let reports = vec![
            report("a", "d1", 0.5),
            report("a", "d2", 0.4),
            report("a", "d3", 0.3),
            report("b", "d1", 0.4),
            report("b", "d2", 0.4),
            report("b", "d3", 0.4),
        ];
        assert_eq!(pairwise_wins(&reports, "a", "b", Metric::F1).unwrap(), (1, 1, 1));

        let same = vec![report("a", "d1", 0.5), report("b", "d1", 0.5)];
        assert_eq!(pairwise_wins(&same, "a", "b", Metric::F1).unwrap(), (0, 0, 1));
    }

    #[test]
    fn pairwise_coverage_mismatch_rejected() {
        let reports = vec![report("a", "d1", 0.5), report("b", "d2", 0.5)];
        assert!(pairwise_wins(&reports, "a", "b", Metric::F1).is_err());
    }

    #[test]
    fn rank_table_has_all_cells() {
        let reports = vec![
            report("a", "d1", 0.9),
            report("b", "d1", 0.5),
            report("c", "d1", 0.1),
        ];
        let table = build_rank_table(&reports).unwrap();
        assert_eq!(table.rank_sums.len(), 6 * 3);
        assert_eq!(table.pairwise_f1.len(), 3);
    }
}

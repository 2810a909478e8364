use serde::{Deserialize, Serialize};

use crate::data::WindowSet;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::score::{AnomalyScoreSeries, ScoreRow};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmmConfig {
    /// Number of mixture components.
    pub components: usize,
    pub max_iter: usize,
    /// Stop when the log-likelihood improves by less than this.
    pub tol: f64,
    /// Lower bound applied to every diagonal variance entry.
    pub covariance_floor: f64,
    pub seed: u64,
}

impl Default for GmmConfig {
    fn default() -> Self {
        GmmConfig {
            components: 3,
            max_iter: 100,
            tol: 1e-6,
            covariance_floor: 1e-6,
            seed: 42,
        }
    }
}

impl GmmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.components == 0 {
            return Err(Error::Argument("components must be >= 1".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Argument("max_iter must be >= 1".into()));
        }
        if !(self.covariance_floor > 0.0) {
            return Err(Error::Argument("covariance_floor must be positive".into()));
        }
        Ok(())
    }
}

/// One diagonal-covariance Gaussian component.
#[derive(Clone, Debug, PartialEq)]
pub struct GmmComponent {
    pub mean: Vec<f64>,
    /// Diagonal variances, each >= covariance_floor.
    pub variance: Vec<f64>,
    pub weight: f64,
}

/// Fitted diagonal-covariance Gaussian mixture.
#[derive(Clone, Debug, PartialEq)]
pub struct GmmModel {
    pub components: Vec<GmmComponent>,
}

/// Fit outcome: the model, the log-likelihood after each EM iteration, and
/// any degeneracy warnings (variance clamped to the floor).
#[derive(Clone, Debug)]
pub struct GmmFit {
    pub model: GmmModel,
    pub log_likelihood: Vec<f64>,
    pub warnings: Vec<String>,
}

impl GmmModel {
    /// Log density of one point under the mixture, via log-sum-exp.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let logs: Vec<f64> = self
            .components
            .iter()
            .map(|c| c.weight.ln() + log_gaussian_diag(x, &c.mean, &c.variance))
            .collect();
        log_sum_exp(&logs)
    }
}

fn log_gaussian_diag(x: &[f64], mean: &[f64], variance: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), mean.len());
    let mut acc = 0.0;
    for ((&xv, &mu), &var) in x.iter().zip(mean).zip(variance) {
        let d = xv - mu;
        acc += (std::f64::consts::TAU * var).ln() + d * d / var;
    }
    -0.5 * acc
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Fit by expectation-maximization until the log-likelihood improvement
/// drops below `tol` or `max_iter` is reached.
pub fn gmm_fit(windows: &WindowSet, cfg: &GmmConfig) -> Result<GmmFit> {
    cfg.validate()?;
    let n = windows.len();
    let k = cfg.components;
    if n < k {
        return Err(Error::Argument(format!(
            "{n} windows cannot support {k} mixture components"
        )));
    }
    let points: Vec<&[f64]> = windows.windows.iter().map(|w| w.values.as_slice()).collect();
    let dim = points[0].len();

    // Initial means: k distinct windows; initial variance: the per-coordinate
    // dataset variance (floored); uniform weights.
    let mut rng = Rng::new(cfg.seed);
    let chosen = rng.sample_indices(n, k);
    let mut dataset_var = vec![0.0f64; dim];
    {
        let mut mean = vec![0.0f64; dim];
        for p in &points {
            for (m, &v) in mean.iter_mut().zip(*p) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        for p in &points {
            for ((s, &v), &m) in dataset_var.iter_mut().zip(*p).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        dataset_var
            .iter_mut()
            .for_each(|s| *s = (*s / n as f64).max(cfg.covariance_floor));
    }
    let mut components: Vec<GmmComponent> = chosen
        .into_iter()
        .map(|i| GmmComponent {
            mean: points[i].to_vec(),
            variance: dataset_var.clone(),
            weight: 1.0 / k as f64,
        })
        .collect();

    let mut warnings = Vec::new();
    let mut ll_trace = Vec::new();
    let mut resp = vec![vec![0.0f64; k]; n];

    for iter in 0..cfg.max_iter {
        // E step: responsibilities and the log-likelihood of the current fit.
        let mut ll = 0.0;
        for (i, p) in points.iter().enumerate() {
            let logs: Vec<f64> = components
                .iter()
                .map(|c| c.weight.ln() + log_gaussian_diag(p, &c.mean, &c.variance))
                .collect();
            let norm = log_sum_exp(&logs);
            ll += norm;
            for (r, &l) in resp[i].iter_mut().zip(&logs) {
                *r = (l - norm).exp();
            }
        }
        ll_trace.push(ll);

        // M step.
        for (j, comp) in components.iter_mut().enumerate() {
            let resp_sum: f64 = resp.iter().map(|r| r[j]).sum();
            comp.weight = resp_sum / n as f64;
            if resp_sum <= 0.0 {
                warnings.push(format!("iteration {iter}: component {j} lost all responsibility"));
                continue;
            }
            let mut mean = vec![0.0f64; dim];
            for (p, r) in points.iter().zip(&resp) {
                for (m, &v) in mean.iter_mut().zip(*p) {
                    *m += r[j] * v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= resp_sum);
            let mut var = vec![0.0f64; dim];
            for (p, r) in points.iter().zip(&resp) {
                for ((s, &v), &m) in var.iter_mut().zip(*p).zip(&mean) {
                    *s += r[j] * (v - m) * (v - m);
                }
            }
            let mut clamped = false;
            for s in var.iter_mut() {
                *s /= resp_sum;
                if *s < cfg.covariance_floor {
                    *s = cfg.covariance_floor;
                    clamped = true;
                }
            }
            if clamped {
                warnings.push(format!(
                    "iteration {iter}: component {j} variance clamped to the floor"
                ));
            }
            comp.mean = mean;
            comp.variance = var;
        }

        // Renormalize weights against floating-point drift.
        let wsum: f64 = components.iter().map(|c| c.weight).sum();
        components.iter_mut().for_each(|c| c.weight /= wsum);

        if iter > 0 {
            let improvement = ll_trace[iter] - ll_trace[iter - 1];
            if improvement.abs() < cfg.tol {
                break;
            }
        }
    }

    Ok(GmmFit {
        model: GmmModel { components },
        log_likelihood: ll_trace,
        warnings,
    })
}

/// Negative log-likelihood of each window under the mixture; higher = more
/// anomalous.
pub fn gmm_score(model: &GmmModel, windows: &WindowSet) -> Result<AnomalyScoreSeries> {
    if model.components.is_empty() {
        return Err(Error::Argument("gmm model has no components".into()));
    }
    let dim = model.components[0].mean.len();
    let rows = windows
        .windows
        .iter()
        .map(|w| {
            if w.values.len() != dim {
                return Err(Error::Argument(format!(
                    "window length {} does not match model dimension {dim}",
                    w.values.len()
                )));
            }
            Ok(ScoreRow {
                start_index: w.start_index,
                start_time: w.start_time,
                end_time: w.end_time,
                residual: None,
                discrimination: None,
                score: -model.log_density(w.values.as_slice()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AnomalyScoreSeries {
        detector: "gmm".into(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{sliding_windows, TimeSeries};
    use chrono::Duration;

    fn window_set_from_vectors(vectors: &[Vec<f64>]) -> WindowSet {
        let len = vectors[0].len();
        let mut values = Vec::new();
        for v in vectors {
            values.extend_from_slice(v);
        }
        let t0 = crate::data::parse_timestamp("2024-01-01 00:00:00").unwrap();
        let series = TimeSeries::new(
            "fixture",
            values
                .iter()
                .enumerate()
                .map(|(i, &v)| (t0 + Duration::minutes(i as i64), v))
                .collect(),
        )
        .unwrap();
        sliding_windows(&series, len, len).unwrap()
    }

    fn jittered_cloud(center: &[f64], n: usize, rng: &mut Rng, spread: f64) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| center.iter().map(|&c| c + spread * rng.normal()).collect())
            .collect()
    }

    #[test]
    fn single_component_matches_closed_form() {
        let mut rng = Rng::new(3);
        let vectors = jittered_cloud(&[1.0, -2.0, 0.5], 40, &mut rng, 0.7);
        let ws = window_set_from_vectors(&vectors);
        let fit = gmm_fit(
            &ws,
            &GmmConfig {
                components: 1,
                max_iter: 5,
                ..GmmConfig::default()
            },
        )
        .unwrap();
        let comp = &fit.model.components[0];

        // K = 1: the EM fixed point is the sample mean and the biased
        // per-coordinate variance.
        let n = vectors.len() as f64;
        for d in 0..3 {
            let mean: f64 = vectors.iter().map(|v| v[d]).sum::<f64>() / n;
            let var: f64 = vectors.iter().map(|v| (v[d] - mean) * (v[d] - mean)).sum::<f64>() / n;
            assert!((comp.mean[d] - mean).abs() < 1e-9, "mean[{d}]");
            assert!((comp.variance[d] - var).abs() < 1e-9, "variance[{d}]");
        }
        assert!((comp.weight - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_likelihood_is_monotone() {
        let mut rng = Rng::new(5);
        let mut vectors = jittered_cloud(&[0.0, 0.0], 30, &mut rng, 0.5);
        vectors.extend(jittered_cloud(&[4.0, 4.0], 30, &mut rng, 0.5));
        let ws = window_set_from_vectors(&vectors);
        let fit = gmm_fit(
            &ws,
            &GmmConfig {
                components: 2,
                max_iter: 50,
                tol: 0.0,
                ..GmmConfig::default()
            },
        )
        .unwrap();
        for pair in fit.log_likelihood.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-9, "log-likelihood decreased: {pair:?}");
        }
    }

    #[test]
    fn weights_sum_to_one() {
        let mut rng = Rng::new(8);
        let vectors = jittered_cloud(&[0.0, 1.0, 2.0], 25, &mut rng, 1.0);
        let ws = window_set_from_vectors(&vectors);
        let fit = gmm_fit(
            &ws,
            &GmmConfig {
                components: 3,
                ..GmmConfig::default()
            },
        )
        .unwrap();
        let sum: f64 = fit.model.components.iter().map(|c| c.weight).sum();
        assert!((sum - 1.0).abs() < 1e-9);
        for c in &fit.model.components {
            assert!(c.weight >= 0.0);
            assert!(c.variance.iter().all(|&v| v >= 1e-6));
        }
    }

    #[test]
    fn recovers_two_separated_clouds() {
        let mut rng = Rng::new(13);
        let mut vectors = jittered_cloud(&[-3.0, -3.0], 60, &mut rng, 0.02);
        vectors.extend(jittered_cloud(&[3.0, 3.0], 60, &mut rng, 0.02));
        let ws = window_set_from_vectors(&vectors);
        let fit = gmm_fit(
            &ws,
            &GmmConfig {
                components: 2,
                max_iter: 200,
                ..GmmConfig::default()
            },
        )
        .unwrap();
        let mut means: Vec<f64> = fit.model.components.iter().map(|c| c.mean[0]).collect();
        means.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((means[0] + 3.0).abs() < 0.1, "low mean {}", means[0]);
        assert!((means[1] - 3.0).abs() < 0.1, "high mean {}", means[1]);
    }

    #[test]
    fn score_orders_by_distance_from_mean() {
        let model = GmmModel {
            components: vec![GmmComponent {
                mean: vec![0.0, 0.0],
                variance: vec![1.0, 1.0],
                weight: 1.0,
            }],
        };
        let near = window_set_from_vectors(&[vec![0.0, 0.0], vec![10.0, 0.0]]);
        let scores = gmm_score(&model, &near).unwrap();
        assert!(scores.rows[1].score > scores.rows[0].score);
        assert!(scores.rows.iter().all(|r| r.score.is_finite()));
        // Identity covariance: score differences are half squared-distance
        // differences.
        let diff = scores.rows[1].score - scores.rows[0].score;
        assert!((diff - 50.0).abs() < 1e-9, "diff {diff}");
    }

    #[test]
    fn more_components_than_windows_rejected() {
        let ws = window_set_from_vectors(&[vec![1.0], vec![2.0]]);
        let cfg = GmmConfig {
            components: 3,
            ..GmmConfig::default()
        };
        assert!(gmm_fit(&ws, &cfg).is_err());
    }
}

use serde::{Deserialize, Serialize};

use crate::data::{sliding_windows, TimeSeries};
use crate::error::{Error, Result};
use crate::nn::{Binding, DenseLayer, LstmLayer, LstmLayerSpec, ParamSet, Tape, Tensor, Vid};
use crate::rng::{derive_seed, Rng};
use crate::score::{AnomalyScoreSeries, ScoreRow};

/// Next-step LSTM predictor: trained to predict the value at `t` from the
/// preceding window, scored by mean absolute prediction error per window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VanLstmConfig {
    /// Stacked LSTM widths.
    pub hidden: Vec<usize>,
    /// Dropout rate on each LSTM layer's output, training only.
    pub dropout: f64,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for VanLstmConfig {
    fn default() -> Self {
        VanLstmConfig {
            hidden: vec![256, 512],
            dropout: 0.2,
            epochs: 10,
            lr: 0.02,
            seed: 42,
        }
    }
}

impl VanLstmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::Argument(
                "hidden must be a non-empty list of positive widths".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Argument(format!(
                "dropout must lie in [0, 1), got {}",
                self.dropout
            )));
        }
        if !(self.lr > 0.0) {
            return Err(Error::Argument(format!("lr must be positive, got {}", self.lr)));
        }
        Ok(())
    }
}

const BATCH: usize = 32;

struct Predictor {
    lstms: Vec<LstmLayer>,
    head: DenseLayer,
    params: ParamSet,
}

impl Predictor {
    fn init(cfg: &VanLstmConfig) -> Result<Predictor> {
        let mut lstms = Vec::with_capacity(cfg.hidden.len());
        let mut input = 1;
        for (i, &h) in cfg.hidden.iter().enumerate() {
            lstms.push(LstmLayer::new(LstmLayerSpec::new(input, h)?, format!("lstm{i}")));
            input = h;
        }
        let head = DenseLayer::new(input, 1, "head");
        let mut params = ParamSet::new();
        let mut rng = Rng::new(derive_seed(cfg.seed, "vanlstm.init"));
        for l in &lstms {
            l.init_params(&mut params, &mut rng)?;
        }
        head.init_params(&mut params, &mut rng)?;
        Ok(Predictor { lstms, head, params })
    }

    /// Forward a batch of equal-length histories; returns the prediction
    /// value id ([m x 1]) for the step after each history. Dropout masks are
    /// applied to each LSTM layer's output when a training rng is supplied.
    fn forward(
        &self,
        tape: &mut Tape,
        binding: &Binding,
        xs: &[Vid],
        dropout: f64,
        mut train_rng: Option<&mut Rng>,
    ) -> Result<Vid> {
        let mut seq = xs.to_vec();
        for layer in &self.lstms {
            seq = layer.forward_tape(tape, binding, &seq, None)?;
            if let Some(rng) = train_rng.as_deref_mut() {
                if dropout > 0.0 {
                    let keep = 1.0 / (1.0 - dropout);
                    seq = seq
                        .iter()
                        .map(|&h| {
                            let shape = tape.value(h).shape().to_vec();
                            let n: usize = shape.iter().product();
                            let mask_data: Vec<f64> = (0..n)
                                .map(|_| if rng.uniform() < dropout { 0.0 } else { keep })
                                .collect();
                            let mask = tape.leaf(Tensor::from_vec(&shape, mask_data).expect("mask"));
                            tape.mul(h, mask)
                        })
                        .collect();
                }
            }
        }
        let last = *seq.last().expect("non-empty sequence");
        self.head.forward_tape(tape, binding, last)
    }

    /// Predict the next value after each history in a batch, without
    /// gradients or dropout. Histories must share one length.
    fn predict(&self, histories: &[&[f64]]) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let binding = tape.bind(&self.params);
        let m = histories.len();
        let steps = histories[0].len();
        let xs: Vec<Vid> = (0..steps)
            .map(|t| {
                let col: Vec<f64> = histories.iter().map(|h| h[t]).collect();
                tape.leaf(Tensor::from_vec(&[m, 1], col).expect("column"))
            })
            .collect();
        let out = self.forward(&mut tape, &binding, &xs, 0.0, None)?;
        Ok(tape.value(out).as_slice().to_vec())
    }
}

fn train(values: &[f64], window_len: usize, cfg: &VanLstmConfig) -> Result<Predictor> {
    let mut predictor = Predictor::init(cfg)?;
    let pairs = values.len() - window_len; // history [i, i+window_len) -> target values[i+window_len]
    let mut order: Vec<usize> = (0..pairs).collect();
    let mut rng = Rng::new(derive_seed(cfg.seed, "vanlstm.train"));

    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut order);
        for (batch_idx, chunk) in order.chunks(BATCH).enumerate() {
            let m = chunk.len();
            let mut tape = Tape::new();
            let binding = tape.bind(&predictor.params);
            let xs: Vec<Vid> = (0..window_len)
                .map(|t| {
                    let col: Vec<f64> = chunk.iter().map(|&i| values[i + t]).collect();
                    tape.leaf(Tensor::from_vec(&[m, 1], col).expect("column"))
                })
                .collect();
            let pred = predictor.forward(&mut tape, &binding, &xs, cfg.dropout, Some(&mut rng))?;
            let targets: Vec<f64> = chunk.iter().map(|&i| values[i + window_len]).collect();
            let target_leaf = tape.leaf(Tensor::from_vec(&[m, 1], targets)?);
            let diff = tape.sub(pred, target_leaf);
            let sq = tape.mul(diff, diff);
            let loss = tape.mean(sq);
            let value = tape.value(loss).item();
            if !value.is_finite() {
                return Err(Error::Train {
                    epoch,
                    batch: batch_idx,
                    message: "prediction loss is not finite".into(),
                });
            }
            let grads = tape.backward(loss)?;
            binding.accumulate_into(&grads, &mut predictor.params)?;
            predictor.params.sgd_step(cfg.lr)?;
        }
    }
    Ok(predictor)
}

/// Train the predictor on a normalized series and score its scoring windows
/// (stride = window_len) by mean absolute prediction error. The value at
/// position t is predicted from the previous `window_len` values (shorter
/// history near the start of the series; position 0 has none and is skipped).
pub fn van_lstm_score(
    series: &TimeSeries,
    cfg: &VanLstmConfig,
    window_len: usize,
) -> Result<AnomalyScoreSeries> {
    cfg.validate()?;
    if window_len == 0 {
        return Err(Error::Argument("window_len must be positive".into()));
    }
    let values = series.values();
    if values.len() <= window_len {
        return Err(Error::Data(format!(
            "series of {} points is too short for window length {window_len}",
            values.len()
        )));
    }
    if values.iter().any(|v| !(-1.0..=1.0).contains(v)) {
        return Err(Error::Argument(
            "series values outside [-1, 1]; normalize before scoring".into(),
        ));
    }

    let predictor = train(&values, window_len, cfg)?;

    // Absolute prediction error per position, grouped by history length so
    // each group runs as one batch.
    let mut abs_err = vec![f64::NAN; values.len()];
    let full: Vec<usize> = (window_len..values.len()).collect();
    for chunk in full.chunks(64) {
        let histories: Vec<&[f64]> = chunk.iter().map(|&t| &values[t - window_len..t]).collect();
        let preds = predictor.predict(&histories)?;
        for (&t, &p) in chunk.iter().zip(&preds) {
            abs_err[t] = (values[t] - p).abs();
        }
    }
    for t in 1..window_len.min(values.len()) {
        let preds = predictor.predict(&[&values[0..t]])?;
        abs_err[t] = (values[t] - preds[0]).abs();
    }

    let scoring = sliding_windows(series, window_len, window_len)?;
    let rows = scoring
        .windows
        .iter()
        .map(|w| {
            let errs: Vec<f64> = (w.start_index..w.start_index + window_len)
                .filter(|&t| abs_err[t].is_finite())
                .map(|t| abs_err[t])
                .collect();
            let score = if errs.is_empty() {
                0.0
            } else {
                errs.iter().sum::<f64>() / errs.len() as f64
            };
            ScoreRow {
                start_index: w.start_index,
                start_time: w.start_time,
                end_time: w.end_time,
                residual: None,
                discrimination: None,
                score,
            }
        })
        .collect();

    Ok(AnomalyScoreSeries {
        detector: "vanlstm".into(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Duration;

    fn series_of(values: &[f64]) -> TimeSeries {
        let t0 = crate::data::parse_timestamp("2024-01-01 00:00:00").unwrap();
        TimeSeries::new(
            "t",
            values
                .iter()
                .enumerate()
                .map(|(i, &v)| (t0 + Duration::minutes(i as i64), v))
                .collect(),
        )
        .unwrap()
    }

    fn small_cfg() -> VanLstmConfig {
        VanLstmConfig {
            hidden: vec![4, 6],
            dropout: 0.2,
            epochs: 6,
            lr: 0.05,
            seed: 3,
        }
    }

    #[test]
    fn near_constant_series_trains_toward_zero_error() {
        // Near-constant signal: after training, the mean prediction error
        // must fall below the untrained model's error.
        let values: Vec<f64> = (0..120).map(|i| 0.3 + 0.001 * ((i % 7) as f64)).collect();
        let series = series_of(&values);
        let window_len = 10;

        let untrained = VanLstmConfig {
            epochs: 0,
            ..small_cfg()
        };
        let before = van_lstm_score(&series, &untrained, window_len).unwrap();
        let after = van_lstm_score(&series, &small_cfg(), window_len).unwrap();
        let mean = |s: &AnomalyScoreSeries| s.scores().iter().sum::<f64>() / s.len() as f64;
        assert!(
            mean(&after) < mean(&before),
            "training did not reduce error: {} vs {}",
            mean(&after),
            mean(&before)
        );
    }

    #[test]
    fn scores_nonnegative_and_deterministic() {
        let values: Vec<f64> = (0..90).map(|i| 0.7 * (i as f64 / 6.0).sin()).collect();
        let series = series_of(&values);
        let a = van_lstm_score(&series, &small_cfg(), 9).unwrap();
        let b = van_lstm_score(&series, &small_cfg(), 9).unwrap();
        assert_eq!(a, b);
        assert!(a.scores().iter().all(|&s| s >= 0.0));
        assert_eq!(a.len(), 10);
    }

    #[test]
    fn rejects_unnormalized_series() {
        let values: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let series = series_of(&values);
        assert!(van_lstm_score(&series, &small_cfg(), 5).is_err());
    }
}

//! Latent-space inversion and reconstruction-based anomaly scoring.
//!
//! To score a window `x`, start from a random latent sequence `z` and run a
//! fixed number of gradient-descent steps on `z` alone (generator and
//! discriminator stay frozen), minimizing a weighted sum of:
//!
//! * residual loss: sum of |x - G(z)| over timesteps, and
//! * discrimination loss: sum of |f(x) - f(G(z))| over the discriminator's
//!   per-timestep hidden features.
//!
//! The anomaly score of the window is the weighted sum of the two losses at
//! the final iteration: windows the trained generator can reproduce score
//! low, windows it cannot score high.

use crate::data::WindowSet;
use crate::error::{Error, Result};
use crate::gan::GanModel;
use crate::nn::{Tape, Tensor, Vid};
use crate::rng::{derive_indexed, Rng};
use crate::score::{AnomalyScoreSeries, ScoreRow};

/// Detector name used in score exports.
pub const DETECTOR_NAME: &str = "ganspect";

/// Settings for the per-window latent search.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InversionConfig {
    /// Number of gradient-descent iterations on z per restart.
    pub iterations: usize,
    /// Trade-off between residual (weight 1 - gamma) and discrimination
    /// (weight gamma) terms, in [0, 1].
    pub gamma: f64,
    /// Learning rate for the z updates.
    pub lr: f64,
    /// Independent restarts per window; the lowest final combined loss wins.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig {
            iterations: 50,
            gamma: 0.1,
            lr: 0.02,
            restarts: 1,
            seed: 42,
        }
    }
}

impl InversionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Argument("iterations must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Argument(format!(
                "gamma must lie in [0, 1], got {}",
                self.gamma
            )));
        }
        if !(self.lr > 0.0) {
            return Err(Error::Argument(format!("lr must be positive, got {}", self.lr)));
        }
        if self.restarts == 0 {
            return Err(Error::Argument("restarts must be >= 1".into()));
        }
        Ok(())
    }
}

/// Outcome of inverting one window.
#[derive(Clone, Debug)]
pub struct InversionResult {
    /// The latent point whose losses are reported.
    pub final_z: Tensor,
    pub residual_loss: f64,
    pub discrimination_loss: f64,
    pub combined_loss: f64,
    /// Combined loss at each iteration, before that iteration's update.
    pub loss_trace: Vec<f64>,
}

/// Sum of absolute point-wise differences between a window and its
/// reconstruction.
pub fn residual_loss(x: &Tensor, gz: &Tensor) -> Result<f64> {
    if x.len() != gz.len() {
        return Err(Error::Argument(format!(
            "residual loss length mismatch: {} vs {}",
            x.len(),
            gz.len()
        )));
    }
    Ok(x.as_slice()
        .iter()
        .zip(gz.as_slice())
        .map(|(a, b)| (a - b).abs())
        .sum())
}

/// Sum of absolute differences between two discriminator feature tensors.
pub fn discrimination_loss(fx: &Tensor, fgz: &Tensor) -> Result<f64> {
    if fx.shape() != fgz.shape() {
        return Err(Error::Argument(format!(
            "discrimination loss shape mismatch: {:?} vs {:?}",
            fx.shape(),
            fgz.shape()
        )));
    }
    Ok(fx
        .as_slice()
        .iter()
        .zip(fgz.as_slice())
        .map(|(a, b)| (a - b).abs())
        .sum())
}

/// (1 - gamma) * residual + gamma * discrimination.
pub fn combined_loss(residual: f64, discrimination: f64, gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Argument(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    Ok((1.0 - gamma) * residual + gamma * discrimination)
}

struct IterationLosses {
    residual: f64,
    discrimination: f64,
    combined: f64,
}

/// One forward pass at the current z: records the combined loss on the tape
/// (for the backward step) and returns the component values.
fn loss_forward(
    tape: &mut Tape,
    model: &GanModel,
    gen_binding: &crate::nn::Binding,
    disc_binding: &crate::nn::Binding,
    z_leaves: &[Vid],
    x: &Tensor,
    fx: &Tensor,
    gamma: f64,
) -> Result<(Vid, IterationLosses)> {
    let gen_net = model.generator_net()?;
    let disc_net = model.discriminator_net()?;

    let generated = gen_net.forward_tape(tape, gen_binding, z_leaves)?;

    // Residual term: sum over timesteps of |x_t - G(z)_t|.
    let mut residual_terms = Vec::with_capacity(generated.len());
    for (t, &g) in generated.iter().enumerate() {
        let x_t = tape.leaf(Tensor::from_vec(&[1, 1], vec![x.row(t)[0]])?);
        let diff = tape.sub(g, x_t);
        let abs = tape.abs(diff);
        residual_terms.push(tape.sum(abs));
    }
    let residual = tape.add_n(&residual_terms);

    // Discrimination term: sum over timesteps of |f(x)_t - f(G(z))_t| over
    // the discriminator's hidden features.
    let fwd = disc_net.forward_tape(tape, disc_binding, &generated)?;
    let mut feature_terms = Vec::with_capacity(fwd.features.len());
    for (t, &f) in fwd.features.iter().enumerate() {
        let fx_t = tape.leaf(Tensor::from_vec(&[1, fx.cols()], fx.row(t).to_vec())?);
        let diff = tape.sub(f, fx_t);
        let abs = tape.abs(diff);
        feature_terms.push(tape.sum(abs));
    }
    let discrimination = tape.add_n(&feature_terms);

    let weighted_r = tape.scale(residual, 1.0 - gamma);
    let weighted_d = tape.scale(discrimination, gamma);
    let combined = tape.add(weighted_r, weighted_d);

    let losses = IterationLosses {
        residual: tape.value(residual).item(),
        discrimination: tape.value(discrimination).item(),
        combined: tape.value(combined).item(),
    };
    Ok((combined, losses))
}

/// Losses at one latent point together with the gradient of the combined
/// loss with respect to z. The model is not mutated.
#[derive(Clone, Debug)]
pub struct WindowLossGradient {
    pub residual: f64,
    pub discrimination: f64,
    pub combined: f64,
    pub z_gradient: Tensor,
}

/// Evaluate the inversion loss and its z-gradient at an explicit latent
/// point, without running the iterative search.
pub fn window_loss_gradient(
    model: &GanModel,
    x: &Tensor,
    z: &Tensor,
    gamma: f64,
) -> Result<WindowLossGradient> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Argument(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    model.check_window_shape(x)?;
    let fx = model.feature_map(x)?;

    let mut tape = Tape::new();
    let gen_binding = tape.bind(&model.generator);
    let disc_binding = tape.bind(&model.discriminator);
    let z_rows: Vec<Vid> = (0..z.rows())
        .map(|t| tape.leaf(Tensor::from_vec(&[1, z.cols()], z.row(t).to_vec()).expect("z row")))
        .collect();
    let (combined_vid, losses) = loss_forward(
        &mut tape,
        model,
        &gen_binding,
        &disc_binding,
        &z_rows,
        x,
        &fx,
        gamma,
    )?;
    let grads = tape.backward(combined_vid)?;
    let mut z_gradient = Tensor::zeros(z.shape());
    for (t, &vid) in z_rows.iter().enumerate() {
        if let Some(g) = grads.wrt(vid) {
            z_gradient.row_mut(t).copy_from_slice(g.as_slice());
        }
    }
    Ok(WindowLossGradient {
        residual: losses.residual,
        discrimination: losses.discrimination,
        combined: losses.combined,
        z_gradient,
    })
}

/// Invert one window starting from an explicit latent point.
pub(crate) fn invert_window_from(
    model: &GanModel,
    x: &Tensor,
    cfg: &InversionConfig,
    mut z: Tensor,
) -> Result<InversionResult> {
    cfg.validate()?;
    model.check_window_shape(x)?;

    // Features of the real window; constant across iterations.
    let fx = model.feature_map(x)?;

    let mut trace = Vec::with_capacity(cfg.iterations);
    let mut reported: Option<(Tensor, IterationLosses)> = None;

    for iteration in 0..cfg.iterations {
        let mut tape = Tape::new();
        let gen_binding = tape.bind(&model.generator);
        let disc_binding = tape.bind(&model.discriminator);
        let z_rows: Vec<Vid> = (0..z.rows())
            .map(|t| tape.leaf(Tensor::from_vec(&[1, z.cols()], z.row(t).to_vec()).expect("z row")))
            .collect();

        let (combined_vid, losses) = loss_forward(
            &mut tape,
            model,
            &gen_binding,
            &disc_binding,
            &z_rows,
            x,
            &fx,
            cfg.gamma,
        )?;
        if !losses.combined.is_finite() {
            return Err(Error::Inversion {
                iteration,
                message: format!("combined loss is {}", losses.combined),
            });
        }
        trace.push(losses.combined);
        if iteration == cfg.iterations - 1 {
            reported = Some((z.clone(), losses));
        }

        // Gradient step on z only.
        let grads = tape.backward(combined_vid)?;
        for (t, &vid) in z_rows.iter().enumerate() {
            if let Some(g) = grads.wrt(vid) {
                let row = z.row_mut(t);
                for (zv, gv) in row.iter_mut().zip(g.as_slice()) {
                    *zv -= cfg.lr * gv;
                }
            }
        }
    }

    let (final_z, losses) = reported.expect("iterations >= 1");
    Ok(InversionResult {
        final_z,
        residual_loss: losses.residual,
        discrimination_loss: losses.discrimination,
        combined_loss: losses.combined,
        loss_trace: trace,
    })
}

/// Map one window to latent space by iterative gradient descent on z. With
/// `restarts > 1` the search is repeated from independent samples and the
/// attempt with the lowest final combined loss is returned. The model is
/// never mutated.
pub fn invert_window(
    model: &GanModel,
    x: &Tensor,
    cfg: &InversionConfig,
    rng: &mut Rng,
) -> Result<InversionResult> {
    cfg.validate()?;
    let prior = model.noise_prior();
    let mut best: Option<InversionResult> = None;
    for _ in 0..cfg.restarts {
        let z0 = prior.sample_one(rng);
        let result = invert_window_from(model, x, cfg, z0)?;
        let better = match &best {
            None => true,
            Some(b) => result.combined_loss < b.combined_loss,
        };
        if better {
            best = Some(result);
        }
    }
    Ok(best.expect("restarts >= 1"))
}

/// Score every window of a (scoring-stride) window set. One row per window,
/// input order preserved; each window's latent search is seeded from
/// `cfg.seed` and the window's position, so scores do not depend on
/// evaluation order.
pub fn anomaly_scores(
    model: &GanModel,
    windows: &WindowSet,
    cfg: &InversionConfig,
) -> Result<AnomalyScoreSeries> {
    cfg.validate()?;
    if windows.window_len != model.config.window_len {
        return Err(Error::Config(format!(
            "window set has window_len {}, model expects {}",
            windows.window_len, model.config.window_len
        )));
    }
    let mut rows = Vec::with_capacity(windows.len());
    for (i, w) in windows.windows.iter().enumerate() {
        let mut rng = Rng::new(derive_indexed(cfg.seed, i as u64));
        let result = invert_window(model, &w.values, cfg, &mut rng).map_err(|e| match e {
            Error::Inversion { iteration, message } => Error::Inversion {
                iteration,
                message: format!("window {i} (start index {}): {message}", w.start_index),
            },
            other => other,
        })?;
        let score = combined_loss(result.residual_loss, result.discrimination_loss, cfg.gamma)?;
        rows.push(ScoreRow {
            start_index: w.start_index,
            start_time: w.start_time,
            end_time: w.end_time,
            residual: Some(result.residual_loss),
            discrimination: Some(result.discrimination_loss),
            score,
        });
    }
    Ok(AnomalyScoreSeries {
        detector: DETECTOR_NAME.into(),
        rows,
    })
}

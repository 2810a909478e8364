//! GAN-based anomaly detection for univariate time series.
//!
//! The pipeline: split a series into fixed-length sliding windows, train an
//! LSTM generator/discriminator pair adversarially on the windows, then score
//! each window by searching the generator's latent space for the point whose
//! reconstruction best matches it. Windows the generator cannot reproduce are
//! anomalous. Classical detectors (isolation forest, Gaussian mixture, a
//! next-step LSTM predictor) and a multi-metric benchmark harness are included
//! for comparison.
//!
//! Everything is seeded and deterministic: the same inputs and seed produce
//! bit-identical models, scores, and reports.

pub mod baselines;
pub mod data;
pub mod error;
pub mod eval;
pub mod gan;
pub mod inversion;
pub mod nn;
pub mod rng;
pub mod score;
pub mod synth;

pub use error::{Error, Result};

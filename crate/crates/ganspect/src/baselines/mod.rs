//! Reference detectors for benchmark comparison.
//!
//! Each baseline consumes the same scoring windows as the GAN detector (one
//! feature vector of length `window_len` per window) and emits one score per
//! window, higher = more anomalous, so evaluation reports are directly
//! comparable.

mod gmm;
mod iforest;
mod vanlstm;

pub use gmm::{gmm_fit, gmm_score, GmmComponent, GmmConfig, GmmFit, GmmModel};
pub use iforest::{avg_path_length, iso_forest_score, IsoForestConfig};
pub use vanlstm::{van_lstm_score, VanLstmConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters for the generator/discriminator pair and their training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GanConfig {
    /// Window length; every training and scoring window has this many points.
    pub window_len: usize,
    /// Width of the latent sequence the generator consumes (one latent row
    /// per timestep).
    pub latent_dim: usize,
    /// Hidden widths of the stacked generator LSTM layers.
    pub generator_hidden: Vec<usize>,
    /// Hidden width of the single discriminator LSTM layer.
    pub discriminator_hidden: usize,
    /// Minibatch size m.
    pub batch_size: usize,
    pub epochs: usize,
    pub lr_g: f64,
    pub lr_d: f64,
    pub seed: u64,
}

impl Default for GanConfig {
    fn default() -> Self {
        GanConfig {
            window_len: 60,
            latent_dim: 1,
            generator_hidden: vec![32, 64, 128],
            discriminator_hidden: 100,
            batch_size: 32,
            epochs: 20,
            lr_g: 0.01,
            lr_d: 0.01,
            seed: 42,
        }
    }
}

impl GanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_len == 0 {
            return Err(Error::Config("window_len must be positive".into()));
        }
        if self.latent_dim == 0 {
            return Err(Error::Config("latent_dim must be positive".into()));
        }
        if self.generator_hidden.is_empty() || self.generator_hidden.contains(&0) {
            return Err(Error::Config(
                "generator_hidden must be a non-empty list of positive widths".into(),
            ));
        }
        if self.discriminator_hidden == 0 {
            return Err(Error::Config("discriminator_hidden must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(self.lr_g > 0.0) || !(self.lr_d > 0.0) {
            return Err(Error::Config(format!(
                "learning rates must be positive, got lr_g {}, lr_d {}",
                self.lr_g, self.lr_d
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_matches_reference_architecture() {
        let cfg = GanConfig::default();
        assert_eq!(cfg.generator_hidden, vec![32, 64, 128]);
        assert_eq!(cfg.discriminator_hidden, 100);
        assert_eq!(cfg.window_len, 60);
        cfg.validate().unwrap();
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = GanConfig::default();
        cfg.generator_hidden = vec![];
        assert!(cfg.validate().is_err());

        let mut cfg = GanConfig::default();
        cfg.lr_d = 0.0;
        assert!(cfg.validate().is_err());

        let mut cfg = GanConfig::default();
        cfg.batch_size = 0;
        assert!(cfg.validate().is_err());
    }
}

//! Generator/discriminator pair and the adversarial training loop.
//!
//! The generator stacks LSTM layers of increasing width (default 32, 64, 128)
//! over a per-timestep latent sequence and maps each hidden state through a
//! dense + tanh head to one value in (-1, 1), matching the normalized data
//! range. The discriminator is a single wider LSTM (default 100 units) whose
//! per-timestep dense logits are mean-pooled and squashed to one probability
//! per window.

mod checkpoint;
mod config;
mod model;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use config::GanConfig;
pub use model::{GanModel, NoisePrior};
pub use train::{
    adversarial_train, discriminator_backward, discriminator_loss, discriminator_step,
    generator_backward, generator_loss, generator_step, sample_noise, EpochStats, TrainStats,
};

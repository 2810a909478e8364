use std::path::Path;
use std::time::Instant;

use crate::data::WindowSet;
use crate::error::{Error, Result};
use crate::gan::config::GanConfig;
use crate::gan::model::{stack_sequences, GanModel, NoisePrior};
use crate::nn::{Tape, Tensor};
use crate::rng::{derive_seed, Rng};

/// Losses recorded for one completed epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub d_loss_real: f64,
    pub d_loss_fake: f64,
    pub g_loss: f64,
    pub seconds: f64,
}

/// Per-epoch training statistics.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainStats {
    pub epochs: Vec<EpochStats>,
}

impl TrainStats {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,d_loss_real,d_loss_fake,g_loss,seconds\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.epoch, e.d_loss_real, e.d_loss_fake, e.g_loss, e.seconds
            ));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Draw `m` latent sequences from the noise prior.
pub fn sample_noise(prior: &NoisePrior, m: usize, rng: &mut Rng) -> Vec<Tensor> {
    (0..m).map(|_| prior.sample_one(rng)).collect()
}

fn train_error(message: impl Into<String>) -> Error {
    Error::Train {
        epoch: 0,
        batch: 0,
        message: message.into(),
    }
}

fn at_batch(err: Error, epoch: usize, batch: usize) -> Error {
    match err {
        Error::Train { message, .. } => Error::Train {
            epoch,
            batch,
            message,
        },
        other => other,
    }
}

pub(crate) struct DiscStepLosses {
    /// Mean BCE over the concatenated real+fake batch.
    pub total: f64,
    /// Mean of -ln D(x) over real windows.
    pub real: f64,
    /// Mean of -ln(1 - D(G(z))) over fake windows.
    pub fake: f64,
}

fn check_batch(model: &GanModel, batch: &[&Tensor], what: &str) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::Argument(format!("empty {what} batch")));
    }
    for w in batch {
        model.check_window_shape(w)?;
    }
    Ok(())
}

fn discriminator_pass(
    model: &mut GanModel,
    real: &[&Tensor],
    fake: &[&Tensor],
    apply_update: bool,
) -> Result<DiscStepLosses> {
    check_batch(model, real, "real")?;
    check_batch(model, fake, "fake")?;
    if real.len() != fake.len() {
        return Err(Error::Argument(format!(
            "real batch has {} windows, fake batch {}",
            real.len(),
            fake.len()
        )));
    }
    let net = model.discriminator_net()?;
    let m = real.len();

    let mut tape = Tape::new();
    let binding = tape.bind(&model.discriminator);
    let combined: Vec<&Tensor> = real.iter().chain(fake.iter()).copied().collect();
    let xs = sequences_to_timestep_leaves(&mut tape, &combined);
    let fwd = net.forward_tape(&mut tape, &binding, &xs)?;

    let mut targets = Tensor::zeros(&[2 * m, 1]);
    for r in 0..m {
        targets.row_mut(r)[0] = 1.0;
    }
    let loss = tape.bce(fwd.prob, targets)?;
    let total = tape.value(loss).item();
    if !total.is_finite() {
        return Err(train_error("discriminator loss is not finite"));
    }

    // Per-half means for the stats, read off the forward probabilities.
    let probs = tape.value(fwd.prob);
    let clamp = |p: f64| p.clamp(crate::nn::PROB_EPS, 1.0 - crate::nn::PROB_EPS);
    let real_mean = (0..m).map(|r| -clamp(probs.get2(r, 0)).ln()).sum::<f64>() / m as f64;
    let fake_mean = (0..m)
        .map(|r| -(1.0 - clamp(probs.get2(m + r, 0))).ln())
        .sum::<f64>()
        / m as f64;

    let grads = tape.backward(loss)?;
    binding.accumulate_into(&grads, &mut model.discriminator)?;
    if apply_update {
        model.discriminator.sgd_step(model.config.lr_d)?;
        if !model.discriminator.all_finite() {
            return Err(train_error("discriminator parameters became non-finite"));
        }
    }
    Ok(DiscStepLosses {
        total,
        real: real_mean,
        fake: fake_mean,
    })
}

pub(crate) fn discriminator_step_detailed(
    model: &mut GanModel,
    real: &[&Tensor],
    fake: &[&Tensor],
) -> Result<DiscStepLosses> {
    discriminator_pass(model, real, fake, true)
}

/// One discriminator update on a real batch and an equally sized batch of
/// generated windows (already detached from the generator). Returns the mean
/// BCE loss with targets 1 for real and 0 for fake. Generator parameters are
/// untouched.
pub fn discriminator_step(model: &mut GanModel, real: &[&Tensor], fake: &[&Tensor]) -> Result<f64> {
    discriminator_pass(model, real, fake, true).map(|l| l.total)
}

/// Discriminator loss with gradients accumulated into the discriminator's
/// gradient slots, without applying an update. For gradient inspection and
/// custom optimizers.
pub fn discriminator_backward(model: &mut GanModel, real: &[&Tensor], fake: &[&Tensor]) -> Result<f64> {
    discriminator_pass(model, real, fake, false).map(|l| l.total)
}

/// Discriminator loss on a batch without updating anything.
pub fn discriminator_loss(model: &GanModel, real: &[&Tensor], fake: &[&Tensor]) -> Result<f64> {
    check_batch(model, real, "real")?;
    check_batch(model, fake, "fake")?;
    let net = model.discriminator_net()?;
    let m = real.len();
    let mut tape = Tape::new();
    let binding = tape.bind(&model.discriminator);
    let combined: Vec<&Tensor> = real.iter().chain(fake.iter()).copied().collect();
    let xs = sequences_to_timestep_leaves(&mut tape, &combined);
    let fwd = net.forward_tape(&mut tape, &binding, &xs)?;
    let mut targets = Tensor::zeros(&[real.len() + fake.len(), 1]);
    for r in 0..m {
        targets.row_mut(r)[0] = 1.0;
    }
    let loss = tape.bce(fwd.prob, targets)?;
    Ok(tape.value(loss).item())
}

fn generator_pass(model: &mut GanModel, noise: &[Tensor], apply_update: bool) -> Result<f64> {
    if noise.is_empty() {
        return Err(Error::Argument("empty noise batch".into()));
    }
    let gen_net = model.generator_net()?;
    let disc_net = model.discriminator_net()?;

    let mut tape = Tape::new();
    let gen_binding = tape.bind(&model.generator);
    let disc_binding = tape.bind(&model.discriminator);
    let refs: Vec<&Tensor> = noise.iter().collect();
    let zs = sequences_to_timestep_leaves(&mut tape, &refs);
    let generated = gen_net.forward_tape(&mut tape, &gen_binding, &zs)?;
    let fwd = disc_net.forward_tape(&mut tape, &disc_binding, &generated)?;

    let mut targets = Tensor::zeros(&[noise.len(), 1]);
    targets.fill(1.0);
    let loss = tape.bce(fwd.prob, targets)?;
    let value = tape.value(loss).item();
    if !value.is_finite() {
        return Err(train_error("generator loss is not finite"));
    }

    let grads = tape.backward(loss)?;
    // Only the generator learns from this pass; the discriminator binding is
    // left untouched so its parameter set never sees these gradients.
    gen_binding.accumulate_into(&grads, &mut model.generator)?;
    let _ = disc_binding;
    if apply_update {
        model.generator.sgd_step(model.config.lr_g)?;
        if !model.generator.all_finite() {
            return Err(train_error("generator parameters became non-finite"));
        }
    }
    Ok(value)
}

/// One generator update on a batch of latent sequences: the generated windows
/// are pushed through the discriminator and scored against target 1 (the
/// non-saturating objective). Discriminator parameters are untouched.
pub fn generator_step(model: &mut GanModel, noise: &[Tensor]) -> Result<f64> {
    generator_pass(model, noise, true)
}

/// Generator loss with gradients accumulated into the generator's gradient
/// slots, without applying an update.
pub fn generator_backward(model: &mut GanModel, noise: &[Tensor]) -> Result<f64> {
    generator_pass(model, noise, false)
}

/// Generator loss on a fixed noise batch without updating anything.
pub fn generator_loss(model: &GanModel, noise: &[Tensor]) -> Result<f64> {
    if noise.is_empty() {
        return Err(Error::Argument("empty noise batch".into()));
    }
    let gen_net = model.generator_net()?;
    let disc_net = model.discriminator_net()?;
    let mut tape = Tape::new();
    let gen_binding = tape.bind(&model.generator);
    let disc_binding = tape.bind(&model.discriminator);
    let refs: Vec<&Tensor> = noise.iter().collect();
    let zs = sequences_to_timestep_leaves(&mut tape, &refs);
    let generated = gen_net.forward_tape(&mut tape, &gen_binding, &zs)?;
    let fwd = disc_net.forward_tape(&mut tape, &disc_binding, &generated)?;
    let mut targets = Tensor::zeros(&[noise.len(), 1]);
    targets.fill(1.0);
    let loss = tape.bce(fwd.prob, targets)?;
    Ok(tape.value(loss).item())
}

/// Run the adversarial training loop: per epoch, shuffle the windows, then
/// for each minibatch do one discriminator update (fresh noise, generated
/// windows detached) followed by one generator update on a second fresh noise
/// sample. The final partial batch is kept.
pub fn adversarial_train(windows: &WindowSet, config: &GanConfig) -> Result<(GanModel, TrainStats)> {
    config.validate()?;
    if windows.is_empty() {
        return Err(Error::Argument("training window set is empty".into()));
    }
    if windows.window_len != config.window_len {
        return Err(Error::Config(format!(
            "window set has window_len {}, config expects {}",
            windows.window_len, config.window_len
        )));
    }
    for w in &windows.windows {
        let bad = w.values.as_slice().iter().any(|v| !(-1.0..=1.0).contains(v));
        if bad {
            return Err(Error::Argument(format!(
                "window at index {} has values outside [-1, 1]; normalize the series first",
                w.start_index
            )));
        }
    }

    let mut model = GanModel::init(config)?;
    let prior = model.noise_prior();
    let mut rng = Rng::new(derive_seed(config.seed, "gan.train"));
    let mut stats = TrainStats::default();

    let mut order: Vec<usize> = (0..windows.len()).collect();
    for epoch in 0..config.epochs {
        let start = Instant::now();
        rng.shuffle(&mut order);

        let mut real_sum = 0.0;
        let mut fake_sum = 0.0;
        let mut g_sum = 0.0;
        let mut samples = 0usize;

        for (batch_idx, chunk) in order.chunks(config.batch_size).enumerate() {
            let m = chunk.len();
            let real: Vec<&Tensor> = chunk.iter().map(|&i| &windows.windows[i].values).collect();

            let noise = sample_noise(&prior, m, &mut rng);
            let fake = model.generate(&noise)?;
            let fake_refs: Vec<&Tensor> = fake.iter().collect();
            let d = discriminator_step_detailed(&mut model, &real, &fake_refs)
                .map_err(|e| at_batch(e, epoch, batch_idx))?;

            let noise2 = sample_noise(&prior, m, &mut rng);
            let g = generator_step(&mut model, &noise2).map_err(|e| at_batch(e, epoch, batch_idx))?;

            real_sum += d.real * m as f64;
            fake_sum += d.fake * m as f64;
            g_sum += g * m as f64;
            samples += m;
        }

        stats.epochs.push(EpochStats {
            epoch,
            d_loss_real: real_sum / samples as f64,
            d_loss_fake: fake_sum / samples as f64,
            g_loss: g_sum / samples as f64,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok((model, stats))
}

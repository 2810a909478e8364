use crate::error::{Error, Result};
use crate::gan::config::GanConfig;
use crate::nn::{
    Binding, DenseLayer, LstmLayer, LstmLayerSpec, ParamSet, SeqLayout, Tape, Tensor, Vid,
};
use crate::rng::{derive_seed, Rng};

/// Standard-normal prior over latent sequences of shape
/// [window_len x latent_dim].
#[derive(Clone, Copy, Debug)]
pub struct NoisePrior {
    pub window_len: usize,
    pub latent_dim: usize,
}

impl NoisePrior {
    pub fn sample_one(&self, rng: &mut Rng) -> Tensor {
        let mut t = Tensor::zeros(&[self.window_len, self.latent_dim]);
        rng.fill_normal(t.as_mut_slice());
        t
    }
}

/// Trained (or freshly initialized) generator and discriminator parameters.
#[derive(Clone, Debug)]
pub struct GanModel {
    pub generator: ParamSet,
    pub discriminator: ParamSet,
    pub config: GanConfig,
}

pub(crate) struct GeneratorNet {
    pub lstms: Vec<LstmLayer>,
    pub head: DenseLayer,
}

pub(crate) struct DiscriminatorNet {
    pub lstm: LstmLayer,
    pub head: DenseLayer,
}

pub(crate) struct DiscForward {
    /// One probability per batch row, [m x 1].
    pub prob: Vid,
    /// Stacked per-timestep hidden states [T*m x hidden], the feature map
    /// used by inversion.
    pub features: Vid,
}

impl GeneratorNet {
    pub fn new(cfg: &GanConfig) -> Result<GeneratorNet> {
        let mut lstms = Vec::with_capacity(cfg.generator_hidden.len());
        let mut input = cfg.latent_dim;
        for (i, &h) in cfg.generator_hidden.iter().enumerate() {
            lstms.push(LstmLayer::new(
                LstmLayerSpec::new(input, h)?,
                format!("gen.lstm{i}"),
            ));
            input = h;
        }
        Ok(GeneratorNet {
            lstms,
            head: DenseLayer::new(input, 1, "gen.head"),
        })
    }

    pub fn init_params(&self, params: &mut ParamSet, rng: &mut Rng) -> Result<()> {
        for l in &self.lstms {
            l.init_params(params, rng)?;
        }
        self.head.init_params(params, rng)
    }

    pub fn validate(&self, params: &ParamSet) -> Result<()> {
        for l in &self.lstms {
            l.validate(params)?;
        }
        self.head.validate(params)
    }

    /// Stacked latent sequence [T*m x latent] in, stacked generated values
    /// [T*m x 1] (tanh, in (-1, 1)) out.
    pub fn forward_tape(
        &self,
        tape: &mut Tape,
        binding: &Binding,
        z: Vid,
        layout: SeqLayout,
    ) -> Result<Vid> {
        let mut seq = z;
        for l in &self.lstms {
            seq = l.forward_tape(tape, binding, seq, None, layout)?;
        }
        let y = self.head.forward_tape(tape, binding, seq)?;
        Ok(tape.tanh(y))
    }
}

impl DiscriminatorNet {
    pub fn new(cfg: &GanConfig) -> Result<DiscriminatorNet> {
        Ok(DiscriminatorNet {
            lstm: LstmLayer::new(LstmLayerSpec::new(1, cfg.discriminator_hidden)?, "disc.lstm"),
            head: DenseLayer::new(cfg.discriminator_hidden, 1, "disc.head"),
        })
    }

    pub fn init_params(&self, params: &mut ParamSet, rng: &mut Rng) -> Result<()> {
        self.lstm.init_params(params, rng)?;
        self.head.init_params(params, rng)
    }

    pub fn validate(&self, params: &ParamSet) -> Result<()> {
        self.lstm.validate(params)?;
        self.head.validate(params)
    }

    /// Stacked window values [T*m x 1] in; the per-timestep dense logits are
    /// mean-pooled over time, then squashed to one probability per row.
    pub fn forward_tape(
        &self,
        tape: &mut Tape,
        binding: &Binding,
        x: Vid,
        layout: SeqLayout,
    ) -> Result<DiscForward> {
        let features = self.lstm.forward_tape(tape, binding, x, None, layout)?;
        let logits = self.head.forward_tape(tape, binding, features)?;
        let mean_logit = tape.mean_over_blocks(logits, layout.t_steps);
        let prob = tape.sigmoid(mean_logit);
        Ok(DiscForward { prob, features })
    }
}

/// Lay out a batch of [seq x dim] sequences as one stacked [T*m x dim] leaf:
/// row block t holds timestep t of every sequence.
pub(crate) fn stack_sequences(tape: &mut Tape, sequences: &[&Tensor]) -> (Vid, SeqLayout) {
    let m = sequences.len();
    let t_steps = sequences[0].rows();
    let dim = sequences[0].cols();
    let mut data = Vec::with_capacity(t_steps * m * dim);
    for t in 0..t_steps {
        for s in sequences {
            data.extend_from_slice(s.row(t));
        }
    }
    let leaf = tape.leaf(Tensor::from_vec(&[t_steps * m, dim], data).expect("sized leaf"));
    (leaf, SeqLayout { t_steps, batch: m })
}

impl GanModel {
    /// Build a model with freshly initialized parameters. Two calls with the
    /// same config yield identical parameters.
    pub fn init(config: &GanConfig) -> Result<GanModel> {
        config.validate()?;
        let gen_net = GeneratorNet::new(config)?;
        let disc_net = DiscriminatorNet::new(config)?;
        let mut rng = Rng::new(derive_seed(config.seed, "gan.init"));
        let mut generator = ParamSet::new();
        gen_net.init_params(&mut generator, &mut rng)?;
        let mut discriminator = ParamSet::new();
        disc_net.init_params(&mut discriminator, &mut rng)?;
        Ok(GanModel {
            generator,
            discriminator,
            config: config.clone(),
        })
    }

    pub fn noise_prior(&self) -> NoisePrior {
        NoisePrior {
            window_len: self.config.window_len,
            latent_dim: self.config.latent_dim,
        }
    }

    pub(crate) fn generator_net(&self) -> Result<GeneratorNet> {
        let net = GeneratorNet::new(&self.config)?;
        net.validate(&self.generator)?;
        Ok(net)
    }

    pub(crate) fn discriminator_net(&self) -> Result<DiscriminatorNet> {
        let net = DiscriminatorNet::new(&self.config)?;
        net.validate(&self.discriminator)?;
        Ok(net)
    }

    /// Generate windows ([window_len x 1] each) from latent sequences,
    /// without tracking gradients.
    pub fn generate(&self, latents: &[Tensor]) -> Result<Vec<Tensor>> {
        if latents.is_empty() {
            return Err(Error::Argument("generate on empty latent batch".into()));
        }
        for z in latents {
            if z.rows() != self.config.window_len || z.cols() != self.config.latent_dim {
                return Err(Error::Argument(format!(
                    "latent shape {:?} does not match [window_len={} x latent_dim={}]",
                    z.shape(),
                    self.config.window_len,
                    self.config.latent_dim
                )));
            }
        }
        let net = self.generator_net()?;
        let mut tape = Tape::new();
        let binding = tape.bind(&self.generator);
        let refs: Vec<&Tensor> = latents.iter().collect();
        let (z, layout) = stack_sequences(&mut tape, &refs);
        let out = net.forward_tape(&mut tape, &binding, z, layout)?;

        let m = latents.len();
        let stacked = tape.value(out);
        let mut windows = vec![Tensor::zeros(&[self.config.window_len, 1]); m];
        for t in 0..self.config.window_len {
            for (j, w) in windows.iter_mut().enumerate() {
                w.row_mut(t)[0] = stacked.get2(t * m + j, 0);
            }
        }
        Ok(windows)
    }

    /// Discriminator features for one window: the LSTM hidden states of the
    /// layer immediately before the probability head,
    /// [window_len x discriminator_hidden].
    pub fn feature_map(&self, window: &Tensor) -> Result<Tensor> {
        self.check_window_shape(window)?;
        let net = self.discriminator_net()?;
        let mut tape = Tape::new();
        let binding = tape.bind(&self.discriminator);
        let (x, layout) = stack_sequences(&mut tape, &[window]);
        let fwd = net.forward_tape(&mut tape, &binding, x, layout)?;
        Ok(tape.value(fwd.features).clone())
    }

    /// Probability that one window is real.
    pub fn discriminator_prob(&self, window: &Tensor) -> Result<f64> {
        self.check_window_shape(window)?;
        let net = self.discriminator_net()?;
        let mut tape = Tape::new();
        let binding = tape.bind(&self.discriminator);
        let (x, layout) = stack_sequences(&mut tape, &[window]);
        let fwd = net.forward_tape(&mut tape, &binding, x, layout)?;
        Ok(tape.value(fwd.prob).item())
    }

    pub(crate) fn check_window_shape(&self, window: &Tensor) -> Result<()> {
        if window.rows() != self.config.window_len || window.cols() != 1 {
            return Err(Error::Argument(format!(
                "window shape {:?} does not match [window_len={} x 1]",
                window.shape(),
                self.config.window_len
            )));
        }
        Ok(())
    }
}

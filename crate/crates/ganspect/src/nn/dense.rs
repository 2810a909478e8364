use crate::error::{Error, Result};
use crate::nn::params::ParamSet;
use crate::nn::tape::{Binding, Tape, Vid};
use crate::nn::tensor::Tensor;
use crate::rng::Rng;

/// Affine map `x W + b` applied per row: weight `{prefix}.w` of shape
/// [input x output], bias `{prefix}.b` of shape [1 x output].
#[derive(Clone, Debug)]
pub struct DenseLayer {
    pub input_size: usize,
    pub output_size: usize,
    pub prefix: String,
}

impl DenseLayer {
    pub fn new(input_size: usize, output_size: usize, prefix: impl Into<String>) -> DenseLayer {
        DenseLayer {
            input_size,
            output_size,
            prefix: prefix.into(),
        }
    }

    fn w_name(&self) -> String {
        format!("{}.w", self.prefix)
    }

    fn b_name(&self) -> String {
        format!("{}.b", self.prefix)
    }

    /// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], bias zero.
    pub fn init_params(&self, params: &mut ParamSet, rng: &mut Rng) -> Result<()> {
        let bound = 1.0 / (self.input_size as f64).sqrt();
        let data = (0..self.input_size * self.output_size)
            .map(|_| rng.uniform_in(-bound, bound))
            .collect();
        params.insert(
            &self.w_name(),
            Tensor::from_vec(&[self.input_size, self.output_size], data)?,
        )?;
        params.insert(&self.b_name(), Tensor::zeros(&[1, self.output_size]))?;
        Ok(())
    }

    pub fn validate(&self, params: &ParamSet) -> Result<()> {
        let w = params.get(&self.w_name())?;
        if w.shape() != [self.input_size, self.output_size] {
            return Err(Error::Config(format!(
                "parameter {:?} has shape {:?}, expected [{}, {}]",
                self.w_name(),
                w.shape(),
                self.input_size,
                self.output_size
            )));
        }
        let b = params.get(&self.b_name())?;
        if b.shape() != [1, self.output_size] {
            return Err(Error::Config(format!(
                "parameter {:?} has shape {:?}, expected [1, {}]",
                self.b_name(),
                b.shape(),
                self.output_size
            )));
        }
        Ok(())
    }

    pub fn forward_tape(&self, tape: &mut Tape, binding: &Binding, x: Vid) -> Result<Vid> {
        if tape.value(x).cols() != self.input_size {
            return Err(Error::Config(format!(
                "dense input has {} columns, layer expects {}",
                tape.value(x).cols(),
                self.input_size
            )));
        }
        let w = binding.vid(&self.w_name())?;
        let b = binding.vid(&self.b_name())?;
        let xa = tape.matmul(x, w);
        Ok(tape.add_row(xa, b))
    }

    /// Plain forward without gradient tracking: input rows are treated as a
    /// batch (for a sequence, one timestep per row).
    pub fn forward(&self, params: &ParamSet, input: &Tensor) -> Result<Tensor> {
        self.validate(params)?;
        if input.cols() != self.input_size {
            return Err(Error::Config(format!(
                "dense input has {} columns, layer expects {}",
                input.cols(),
                self.input_size
            )));
        }
        let mut tape = Tape::new();
        let binding = tape.bind(params);
        let x = tape.leaf(input.clone());
        let out = self.forward_tape(&mut tape, &binding, x)?;
        Ok(tape.value(out).clone())
    }
}

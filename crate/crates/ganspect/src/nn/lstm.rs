use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::params::ParamSet;
use crate::nn::tape::{Binding, SeqLayout, Tape, Vid};
use crate::nn::tensor::Tensor;
use crate::rng::Rng;

/// Shape of one LSTM layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LstmLayerSpec {
    pub input_size: usize,
    pub hidden_size: usize,
}

impl LstmLayerSpec {
    pub fn new(input_size: usize, hidden_size: usize) -> Result<LstmLayerSpec> {
        if input_size == 0 || hidden_size == 0 {
            return Err(Error::Config(format!(
                "lstm layer sizes must be >= 1, got input {input_size}, hidden {hidden_size}"
            )));
        }
        Ok(LstmLayerSpec {
            input_size,
            hidden_size,
        })
    }
}

/// Hidden/cell state pair for one layer, one row per batch element.
#[derive(Clone, Debug)]
pub struct LstmState {
    pub hidden: Tensor,
    pub cell: Tensor,
}

impl LstmState {
    pub fn zeros(batch: usize, hidden_size: usize) -> LstmState {
        LstmState {
            hidden: Tensor::zeros(&[batch, hidden_size]),
            cell: Tensor::zeros(&[batch, hidden_size]),
        }
    }
}

/// Standard LSTM cell (input/forget/output gates, tanh candidate, no
/// peepholes). Gate weights are packed column-wise as [i | f | g | o] into
/// `{prefix}.wx` of shape [input x 4h], `{prefix}.wh` of shape [h x 4h] and
/// bias `{prefix}.b` of shape [1 x 4h].
#[derive(Clone, Debug)]
pub struct LstmLayer {
    pub spec: LstmLayerSpec,
    pub prefix: String,
}

impl LstmLayer {
    pub fn new(spec: LstmLayerSpec, prefix: impl Into<String>) -> LstmLayer {
        LstmLayer {
            spec,
            prefix: prefix.into(),
        }
    }

    fn wx_name(&self) -> String {
        format!("{}.wx", self.prefix)
    }

    fn wh_name(&self) -> String {
        format!("{}.wh", self.prefix)
    }

    fn b_name(&self) -> String {
        format!("{}.b", self.prefix)
    }

    /// Insert freshly initialized parameters: weights uniform in
    /// [-1/sqrt(h), 1/sqrt(h)], biases zero.
    pub fn init_params(&self, params: &mut ParamSet, rng: &mut Rng) -> Result<()> {
        let h = self.spec.hidden_size;
        let bound = 1.0 / (h as f64).sqrt();
        let init = |rows: usize, cols: usize, rng: &mut Rng| {
            let data = (0..rows * cols)
                .map(|_| rng.uniform_in(-bound, bound))
                .collect();
            Tensor::from_vec(&[rows, cols], data).expect("sized data")
        };
        params.insert(&self.wx_name(), init(self.spec.input_size, 4 * h, rng))?;
        params.insert(&self.wh_name(), init(h, 4 * h, rng))?;
        params.insert(&self.b_name(), Tensor::zeros(&[1, 4 * h]))?;
        Ok(())
    }

    /// Verify the parameter set holds this layer's tensors at the right shapes.
    pub fn validate(&self, params: &ParamSet) -> Result<()> {
        let h = self.spec.hidden_size;
        let checks = [
            (self.wx_name(), vec![self.spec.input_size, 4 * h]),
            (self.wh_name(), vec![h, 4 * h]),
            (self.b_name(), vec![1, 4 * h]),
        ];
        for (name, want) in checks {
            let got = params.get(&name)?;
            if got.shape() != want.as_slice() {
                return Err(Error::Config(format!(
                    "parameter {name:?} has shape {:?}, layer spec requires {:?}",
                    got.shape(),
                    want
                )));
            }
        }
        Ok(())
    }

    /// Run the layer over a stacked sequence [T*m x input] (see
    /// [`SeqLayout`]), recording one fused operation on the tape. Returns
    /// the stacked hidden states [T*m x hidden]. With no initial state,
    /// hidden and cell start at zero.
    pub fn forward_tape(
        &self,
        tape: &mut Tape,
        binding: &Binding,
        x: Vid,
        init: Option<(Vid, Vid)>,
        layout: SeqLayout,
    ) -> Result<Vid> {
        if layout.t_steps == 0 || layout.batch == 0 {
            return Err(Error::Argument("lstm forward on empty sequence".into()));
        }
        if tape.value(x).rows() != layout.t_steps * layout.batch
            || tape.value(x).cols() != self.spec.input_size
        {
            return Err(Error::Config(format!(
                "stacked input shape {:?} does not match layout {layout:?} with input size {}",
                tape.value(x).shape(),
                self.spec.input_size
            )));
        }
        let wx = binding.vid(&self.wx_name())?;
        let wh = binding.vid(&self.wh_name())?;
        let b = binding.vid(&self.b_name())?;
        Ok(tape.lstm_layer(x, wx, wh, b, init, layout))
    }
}

/// Run one LSTM layer over a single sequence without keeping a caller-visible
/// tape: input [seq_len x input_size] -> hidden states [seq_len x hidden].
/// (A single sequence is the batch-1 case of the stacked layout.)
pub fn lstm_forward(
    spec: LstmLayerSpec,
    params: &ParamSet,
    prefix: &str,
    input: &Tensor,
    init: Option<&LstmState>,
) -> Result<Tensor> {
    if input.rows() < 1 || input.cols() != spec.input_size {
        return Err(Error::Argument(format!(
            "input shape {:?} does not match spec input size {}",
            input.shape(),
            spec.input_size
        )));
    }
    let layer = LstmLayer::new(spec, prefix);
    layer.validate(params)?;

    let mut tape = Tape::new();
    let binding = tape.bind(params);
    let x = tape.leaf(input.clone());
    let init_vids = init.map(|s| {
        (
            tape.leaf(Tensor::from_vec(&[1, spec.hidden_size], s.hidden.as_slice().to_vec()).expect("h")),
            tape.leaf(Tensor::from_vec(&[1, spec.hidden_size], s.cell.as_slice().to_vec()).expect("c")),
        )
    });
    let layout = SeqLayout {
        t_steps: input.rows(),
        batch: 1,
    };
    let hidden = layer.forward_tape(&mut tape, &binding, x, init_vids, layout)?;
    Ok(tape.value(hidden).clone())
}

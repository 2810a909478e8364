//! Minimal differentiable-computation core.
//!
//! [`Tensor`] is a dense row-major f64 array. [`Tape`] records forward
//! operations and replays them in reverse to produce exact gradients of a
//! scalar loss with respect to any recorded value, including network
//! parameters ([`ParamSet`]) and designated inputs such as latent vectors.
//! Layers ([`LstmLayer`], [`DenseLayer`]) build their forward passes out of
//! tape operations, so their gradients need no hand-derived backward rules.
//!
//! All arithmetic is in f64 and fully deterministic.

mod dense;
mod lstm;
mod loss;
mod params;
mod tape;
mod tensor;

pub use dense::DenseLayer;
pub use lstm::{lstm_forward, LstmLayer, LstmLayerSpec, LstmState};
pub use loss::bce_loss;
pub use params::{Param, ParamSet};
pub(crate) fn params_byte_reader(bytes: &[u8]) -> params::ByteReader<'_> {
    params::ByteReader::new(bytes)
}
pub use tape::{Binding, Gradients, SeqLayout, Tape, Vid};
pub(crate) use tape::PROB_EPS;
pub use tensor::Tensor;

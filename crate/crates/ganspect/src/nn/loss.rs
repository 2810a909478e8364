use crate::error::Result;
use crate::nn::tape::Tape;
use crate::nn::tensor::Tensor;

/// Mean binary cross-entropy of predicted probabilities against 0/1 targets.
///
/// Probabilities are clamped to [1e-7, 1 - 1e-7] before the logs, so inputs
/// at exactly 0 or 1 stay finite.
pub fn bce_loss(predicted: &Tensor, targets: &Tensor) -> Result<f64> {
    let mut tape = Tape::new();
    let p = tape.leaf(predicted.clone());
    let loss = tape.bce(p, targets.clone())?;
    Ok(tape.value(loss).item())
}

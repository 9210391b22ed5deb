use super::config::LossKind;
use crate::error::{Error, Result};
use crate::neural::Tensor;
use crate::scalar::Scalar;

/// Summed elementwise loss and its gradient with respect to `pred`.
pub fn loss_sum<T: Scalar>(pred: &Tensor<T>, gold: &Tensor<T>, kind: LossKind) -> Result<(T, Tensor<T>)> {
    if pred.shape() != gold.shape() {
        return Err(Error::shape(
            "loss",
            format!("prediction {:?} against gold {:?}", pred.shape(), gold.shape()),
        ));
    }
    let diff = pred.sub(gold)?;
    let two = T::of(2.0);
    Ok(match kind {
        LossKind::Mse => (diff.data().iter().map(|&d| d * d).sum(), diff.scale(two)),
        LossKind::Mae => (
            diff.data().iter().map(|&d| d.abs()).sum(),
            diff.map(|d| {
                if d > T::zero() {
                    T::one()
                } else if d < T::zero() {
                    -T::one()
                } else {
                    T::zero()
                }
            }),
        ),
    })
}

/// Mean elementwise loss over all tokens and targets, with its gradient.
pub fn loss<T: Scalar>(pred: &Tensor<T>, gold: &Tensor<T>, kind: LossKind) -> Result<(T, Tensor<T>)> {
    let (sum, grad) = loss_sum(pred, gold, kind)?;
    let n = T::of_usize(pred.len().max(1));
    Ok((sum / n, grad.scale(T::one() / n)))
}

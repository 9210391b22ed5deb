use super::param::Parameterized;
use super::tensor::Tensor;
use crate::error::Result;
use crate::scalar::Scalar;

/// A differentiable block with hand-written backward pass.
///
/// `forward` is pure and returns whatever the backward pass needs; `backward`
/// accumulates parameter gradients (`+=`, so several forward/backward pairs can share
/// one optimizer step) and returns the gradient with respect to the input.
pub trait Layer<T: Scalar>: Parameterized<T> {
    type Cache;

    fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, Self::Cache)>;

    fn backward(&mut self, cache: &Self::Cache, dy: &Tensor<T>) -> Result<Tensor<T>>;

    /// Forward pass discarding the cache.
    fn apply(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.forward(x).map(|(y, _)| y)
    }
}

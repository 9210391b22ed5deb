use rand::Rng;

use super::tensor::Tensor;
use crate::scalar::Scalar;

/// A learnable tensor together with its accumulated gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct Param<T> {
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
}

impl<T: Scalar> Param<T> {
    pub fn new(value: Tensor<T>) -> Self {
        let grad = Tensor::zeros(value.shape());
        Self { value, grad }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::new(Tensor::zeros(shape))
    }

    /// Uniform(±√(6/(fan_in+fan_out))) initialization.
    pub fn xavier(fan_in: usize, fan_out: usize, shape: &[usize], rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| T::of(rng.random_range(-limit..=limit))).collect();
        Self::new(Tensor::from_vec(shape, data).expect("shape product matches"))
    }

    pub fn zero_grad(&mut self) {
        self.grad.data_mut().fill(T::zero());
    }

    pub fn accumulate(&mut self, g: &Tensor<T>) {
        self.grad.add_assign(g).expect("gradient shape equals parameter shape");
    }
}

/// Anything that owns named parameters.
///
/// Names are stable, dot-separated paths (`feature.encoder.attn.q.weight`); they key
/// checkpoints and optimizer state.
pub trait Parameterized<T: Scalar> {
    fn collect_params<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Param<T>)>);

    fn collect_params_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<(String, &'a mut Param<T>)>);

    fn params(&self) -> Vec<(String, &Param<T>)> {
        let mut out = Vec::new();
        self.collect_params("", &mut out);
        out
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Param<T>)> {
        let mut out = Vec::new();
        self.collect_params_mut("", &mut out);
        out
    }

    fn zero_grad(&mut self) {
        for (_, p) in self.params_mut() {
            p.zero_grad();
        }
    }

    fn num_params(&self) -> usize {
        self.params().iter().map(|(_, p)| p.value.len()).sum()
    }
}

pub(crate) fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

use rand::Rng;

use super::layer::Layer;
use super::param::{join, Param, Parameterized};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Fully connected layer `y = xW + b` with `W: [d_in × d_out]`; the bias is optional.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T> {
    pub weight: Param<T>,
    pub bias: Option<Param<T>>,
}

impl<T: Scalar> Dense<T> {
    pub fn new(d_in: usize, d_out: usize, rng: &mut impl Rng) -> Self {
        Self {
            weight: Param::xavier(d_in, d_out, &[d_in, d_out], rng),
            bias: Some(Param::zeros(&[d_out])),
        }
    }

    pub fn without_bias(d_in: usize, d_out: usize, rng: &mut impl Rng) -> Self {
        Self {
            weight: Param::xavier(d_in, d_out, &[d_in, d_out], rng),
            bias: None,
        }
    }

    pub fn from_tensors(weight: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        if weight.shape().len() != 2 || bias.len() != weight.cols() {
            return Err(Error::shape(
                "dense",
                format!("weight {:?} with bias {:?}", weight.shape(), bias.shape()),
            ));
        }
        Ok(Self {
            weight: Param::new(weight),
            bias: Some(Param::new(bias)),
        })
    }

    pub fn d_in(&self) -> usize {
        self.weight.value.rows()
    }

    pub fn d_out(&self) -> usize {
        self.weight.value.cols()
    }
}

impl<T: Scalar> Parameterized<T> for Dense<T> {
    fn collect_params<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Param<T>)>) {
        out.push((join(prefix, "weight"), &self.weight));
        if let Some(b) = &self.bias {
            out.push((join(prefix, "bias"), b));
        }
    }

    fn collect_params_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<(String, &'a mut Param<T>)>) {
        out.push((join(prefix, "weight"), &mut self.weight));
        if let Some(b) = &mut self.bias {
            out.push((join(prefix, "bias"), b));
        }
    }
}

impl<T: Scalar> Layer<T> for Dense<T> {
    type Cache = Tensor<T>;

    fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>)> {
        if x.cols() != self.d_in() {
            return Err(Error::shape(
                "dense",
                format!("input width {} for layer expecting {}", x.cols(), self.d_in()),
            ));
        }
        let mut y = x.matmul(&self.weight.value)?;
        if let Some(b) = &self.bias {
            y = y.add_row_vector(&b.value)?;
        }
        Ok((y, x.clone()))
    }

    fn backward(&mut self, x: &Tensor<T>, dy: &Tensor<T>) -> Result<Tensor<T>> {
        self.weight.accumulate(&x.matmul_tn(dy)?);
        if let Some(b) = &mut self.bias {
            b.accumulate(&dy.sum_rows());
        }
        dy.matmul_nt(&self.weight.value)
    }
}

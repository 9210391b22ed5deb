use super::layer::Layer;
use super::param::{join, Param, Parameterized};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Per-row layer normalization with learned gain and bias.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerNorm<T> {
    pub gain: Param<T>,
    pub bias: Param<T>,
    pub eps: T,
}

#[derive(Clone, Debug)]
pub struct LayerNormCache<T> {
    normalized: Tensor<T>,
    inv_std: Vec<T>,
}

impl<T: Scalar> LayerNorm<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            gain: Param::new(Tensor::full(&[dim], T::one())),
            bias: Param::zeros(&[dim]),
            eps: T::of(LAYER_NORM_EPS),
        }
    }

    pub fn dim(&self) -> usize {
        self.gain.value.len()
    }

    /// Normalized rows before gain and bias are applied.
    pub fn normalize(&self, x: &Tensor<T>) -> Tensor<T> {
        self.normalize_with_stats(x).0
    }

    fn normalize_with_stats(&self, x: &Tensor<T>) -> (Tensor<T>, Vec<T>) {
        let d = T::of_usize(x.cols());
        let mut out = x.clone();
        let mut inv_std = Vec::with_capacity(x.rows());
        for r in 0..x.rows() {
            let row = out.row_mut(r);
            let mean = row.iter().copied().sum::<T>() / d;
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / d;
            let inv = T::one() / (var + self.eps).sqrt();
            for v in row.iter_mut() {
                *v = (*v - mean) * inv;
            }
            inv_std.push(inv);
        }
        (out, inv_std)
    }
}

impl<T: Scalar> Parameterized<T> for LayerNorm<T> {
    fn collect_params<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Param<T>)>) {
        out.push((join(prefix, "gain"), &self.gain));
        out.push((join(prefix, "bias"), &self.bias));
    }

    fn collect_params_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<(String, &'a mut Param<T>)>) {
        out.push((join(prefix, "gain"), &mut self.gain));
        out.push((join(prefix, "bias"), &mut self.bias));
    }
}

impl<T: Scalar> Layer<T> for LayerNorm<T> {
    type Cache = LayerNormCache<T>;

    fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, LayerNormCache<T>)> {
        if x.cols() != self.dim() {
            return Err(Error::shape(
                "layer_norm",
                format!("width {} for norm of {}", x.cols(), self.dim()),
            ));
        }
        let (normalized, inv_std) = self.normalize_with_stats(x);
        let mut y = normalized.clone();
        for r in 0..y.rows() {
            for (c, v) in y.row_mut(r).iter_mut().enumerate() {
                *v = *v * self.gain.value.data()[c] + self.bias.value.data()[c];
            }
        }
        Ok((y, LayerNormCache { normalized, inv_std }))
    }

    fn backward(&mut self, cache: &LayerNormCache<T>, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let xhat = &cache.normalized;
        let (n, d) = (xhat.rows(), xhat.cols());
        let dn = T::of_usize(d);
        let mut dgain = Tensor::zeros(&[d]);
        let mut dbias = Tensor::zeros(&[d]);
        let mut dx = Tensor::zeros(&[n, d]);
        for r in 0..n {
            let g_row = dy.row(r);
            let h_row = xhat.row(r);
            let mut dxhat = vec![T::zero(); d];
            for c in 0..d {
                dgain.data_mut()[c] += g_row[c] * h_row[c];
                dbias.data_mut()[c] += g_row[c];
                dxhat[c] = g_row[c] * self.gain.value.data()[c];
            }
            let mean_d = dxhat.iter().copied().sum::<T>() / dn;
            let mean_dh = dxhat.iter().zip(h_row).map(|(&a, &b)| a * b).sum::<T>() / dn;
            let inv = cache.inv_std[r];
            for (c, out) in dx.row_mut(r).iter_mut().enumerate() {
                *out = inv * (dxhat[c] - mean_d - h_row[c] * mean_dh);
            }
        }
        self.gain.accumulate(&dgain);
        self.bias.accumulate(&dbias);
        Ok(dx)
    }
}

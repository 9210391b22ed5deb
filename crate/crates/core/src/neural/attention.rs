use rand::Rng;

use super::dense::Dense;
use super::layer::Layer;
use super::param::{join, Param, Parameterized};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Bidirectional multi-head scaled dot-product self-attention over the rows of a
/// `[T × d]` sequence. No mask: every position attends to every position.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiHeadAttention<T> {
    pub query: Dense<T>,
    pub key: Dense<T>,
    pub value: Dense<T>,
    pub output: Dense<T>,
    heads: usize,
}

#[derive(Clone, Debug)]
pub struct AttentionCache<T> {
    input: Tensor<T>,
    q: Tensor<T>,
    k: Tensor<T>,
    v: Tensor<T>,
    /// Row-stochastic attention weights, one `[T × T]` matrix per head.
    weights: Vec<Tensor<T>>,
    context: Tensor<T>,
}

impl<T> AttentionCache<T> {
    pub fn weights(&self) -> &[Tensor<T>] {
        &self.weights
    }
}

fn softmax_rows<T: Scalar>(s: &mut Tensor<T>) {
    for r in 0..s.rows() {
        let row = s.row_mut(r);
        let max = row.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
        let mut total = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
}

impl<T: Scalar> MultiHeadAttention<T> {
    pub fn new(d_model: usize, heads: usize, rng: &mut impl Rng) -> Result<Self> {
        if heads == 0 || !d_model.is_multiple_of(heads) {
            return Err(Error::Config(format!(
                "model width {d_model} is not divisible by {heads} heads"
            )));
        }
        Ok(Self {
            query: Dense::new(d_model, d_model, rng),
            // a key bias shifts every score in a row equally and cancels in the softmax
            key: Dense::without_bias(d_model, d_model, rng),
            value: Dense::new(d_model, d_model, rng),
            output: Dense::new(d_model, d_model, rng),
            heads,
        })
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn d_model(&self) -> usize {
        self.query.d_in()
    }

    fn head_dim(&self) -> usize {
        self.d_model() / self.heads
    }
}

impl<T: Scalar> Parameterized<T> for MultiHeadAttention<T> {
    fn collect_params<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Param<T>)>) {
        self.query.collect_params(&join(prefix, "query"), out);
        self.key.collect_params(&join(prefix, "key"), out);
        self.value.collect_params(&join(prefix, "value"), out);
        self.output.collect_params(&join(prefix, "output"), out);
    }

    fn collect_params_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<(String, &'a mut Param<T>)>) {
        self.query.collect_params_mut(&join(prefix, "query"), out);
        self.key.collect_params_mut(&join(prefix, "key"), out);
        self.value.collect_params_mut(&join(prefix, "value"), out);
        self.output.collect_params_mut(&join(prefix, "output"), out);
    }
}

impl<T: Scalar> Layer<T> for MultiHeadAttention<T> {
    type Cache = AttentionCache<T>;

    fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, AttentionCache<T>)> {
        let q = self.query.apply(x)?;
        let k = self.key.apply(x)?;
        let v = self.value.apply(x)?;
        let dh = self.head_dim();
        let scale = T::one() / T::of_usize(dh).sqrt();
        let mut context = Tensor::zeros(&[x.rows(), self.d_model()]);
        let mut weights = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let (qh, kh, vh) = (q.columns(h * dh, dh), k.columns(h * dh, dh), v.columns(h * dh, dh));
            let mut a = qh.matmul_nt(&kh)?.scale(scale);
            softmax_rows(&mut a);
            context.set_columns(h * dh, &a.matmul(&vh)?);
            weights.push(a);
        }
        let y = self.output.apply(&context)?;
        Ok((
            y,
            AttentionCache {
                input: x.clone(),
                q,
                k,
                v,
                weights,
                context,
            },
        ))
    }

    fn backward(&mut self, cache: &AttentionCache<T>, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let dcontext = self.output.backward(&cache.context, dy)?;
        let dh = self.head_dim();
        let scale = T::one() / T::of_usize(dh).sqrt();
        let n = cache.input.rows();
        let mut dq = Tensor::zeros(&[n, self.d_model()]);
        let mut dk = Tensor::zeros(&[n, self.d_model()]);
        let mut dv = Tensor::zeros(&[n, self.d_model()]);
        for h in 0..self.heads {
            let a = &cache.weights[h];
            let qh = cache.q.columns(h * dh, dh);
            let kh = cache.k.columns(h * dh, dh);
            let vh = cache.v.columns(h * dh, dh);
            let dout = dcontext.columns(h * dh, dh);
            let da = dout.matmul_nt(&vh)?;
            dv.set_columns(h * dh, &a.matmul_tn(&dout)?);
            // softmax backward: dS = A ⊙ (dA − rowsum(dA ⊙ A))
            let mut ds = Tensor::zeros(&[n, n]);
            for r in 0..n {
                let dot: T = da.row(r).iter().zip(a.row(r)).map(|(&g, &p)| g * p).sum();
                for c in 0..n {
                    ds[(r, c)] = a[(r, c)] * (da[(r, c)] - dot) * scale;
                }
            }
            dq.set_columns(h * dh, &ds.matmul(&kh)?);
            dk.set_columns(h * dh, &ds.matmul_tn(&qh)?);
        }
        let mut dx = self.query.backward(&cache.input, &dq)?;
        dx.add_assign(&self.key.backward(&cache.input, &dk)?)?;
        dx.add_assign(&self.value.backward(&cache.input, &dv)?)?;
        Ok(dx)
    }
}

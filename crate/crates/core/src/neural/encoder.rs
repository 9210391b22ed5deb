use rand::Rng;

use super::activation::Activation;
use super::attention::{AttentionCache, MultiHeadAttention};
use super::dense::Dense;
use super::layer::Layer;
use super::norm::{LayerNorm, LayerNormCache};
use super::param::{join, Param, Parameterized};
use super::tensor::Tensor;
use crate::error::Result;
use crate::scalar::Scalar;

/// Position-wise feed-forward block: `dense → activation → dense`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeedForward<T> {
    pub inner: Dense<T>,
    pub outer: Dense<T>,
    pub activation: Activation,
}

#[derive(Clone, Debug)]
pub struct FeedForwardCache<T> {
    input: Tensor<T>,
    pre_activation: Tensor<T>,
    hidden: Tensor<T>,
}

impl<T: Scalar> FeedForward<T> {
    pub fn new(d_model: usize, d_hidden: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        Self {
            inner: Dense::new(d_model, d_hidden, rng),
            outer: Dense::new(d_hidden, d_model, rng),
            activation,
        }
    }
}

impl<T: Scalar> Parameterized<T> for FeedForward<T> {
    fn collect_params<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Param<T>)>) {
        self.inner.collect_params(&join(prefix, "inner"), out);
        self.outer.collect_params(&join(prefix, "outer"), out);
    }

    fn collect_params_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<(String, &'a mut Param<T>)>) {
        self.inner.collect_params_mut(&join(prefix, "inner"), out);
        self.outer.collect_params_mut(&join(prefix, "outer"), out);
    }
}

impl<T: Scalar> Layer<T> for FeedForward<T> {
    type Cache = FeedForwardCache<T>;

    fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, FeedForwardCache<T>)> {
        let pre_activation = self.inner.apply(x)?;
        let hidden = self.activation.apply(&pre_activation)?;
        let y = self.outer.apply(&hidden)?;
        Ok((
            y,
            FeedForwardCache {
                input: x.clone(),
                pre_activation,
                hidden,
            },
        ))
    }

    fn backward(&mut self, cache: &FeedForwardCache<T>, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let dhidden = self.outer.backward(&cache.hidden, dy)?;
        let dpre = self.activation.backward(&cache.pre_activation, &dhidden)?;
        self.inner.backward(&cache.input, &dpre)
    }
}

/// Pre-norm transformer encoder block:
/// `h = x + Attn(LN₁(x))`, `y = h + FFN(LN₂(h))`.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderLayer<T> {
    pub norm_attn: LayerNorm<T>,
    pub attention: MultiHeadAttention<T>,
    pub norm_ffn: LayerNorm<T>,
    pub ffn: FeedForward<T>,
}

#[derive(Clone, Debug)]
pub struct EncoderCache<T> {
    norm_attn: LayerNormCache<T>,
    attention: AttentionCache<T>,
    norm_ffn: LayerNormCache<T>,
    ffn: FeedForwardCache<T>,
}

impl<T: Scalar> EncoderLayer<T> {
    pub fn new(
        d_model: usize,
        heads: usize,
        ffn_ratio: usize,
        activation: Activation,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        Ok(Self {
            norm_attn: LayerNorm::new(d_model),
            attention: MultiHeadAttention::new(d_model, heads, rng)?,
            norm_ffn: LayerNorm::new(d_model),
            ffn: FeedForward::new(d_model, d_model * ffn_ratio, activation, rng),
        })
    }
}

impl<T: Scalar> Parameterized<T> for EncoderLayer<T> {
    fn collect_params<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Param<T>)>) {
        self.norm_attn.collect_params(&join(prefix, "norm_attn"), out);
        self.attention.collect_params(&join(prefix, "attention"), out);
        self.norm_ffn.collect_params(&join(prefix, "norm_ffn"), out);
        self.ffn.collect_params(&join(prefix, "ffn"), out);
    }

    fn collect_params_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<(String, &'a mut Param<T>)>) {
        self.norm_attn.collect_params_mut(&join(prefix, "norm_attn"), out);
        self.attention.collect_params_mut(&join(prefix, "attention"), out);
        self.norm_ffn.collect_params_mut(&join(prefix, "norm_ffn"), out);
        self.ffn.collect_params_mut(&join(prefix, "ffn"), out);
    }
}

impl<T: Scalar> Layer<T> for EncoderLayer<T> {
    type Cache = EncoderCache<T>;

    fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, EncoderCache<T>)> {
        let (n1, norm_attn) = self.norm_attn.forward(x)?;
        let (a, attention) = self.attention.forward(&n1)?;
        let h = x.add(&a)?;
        let (n2, norm_ffn) = self.norm_ffn.forward(&h)?;
        let (f, ffn) = self.ffn.forward(&n2)?;
        let y = h.add(&f)?;
        Ok((
            y,
            EncoderCache {
                norm_attn,
                attention,
                norm_ffn,
                ffn,
            },
        ))
    }

    fn backward(&mut self, cache: &EncoderCache<T>, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let dn2 = self.ffn.backward(&cache.ffn, dy)?;
        let mut dh = self.norm_ffn.backward(&cache.norm_ffn, &dn2)?;
        dh.add_assign(dy)?;
        let dn1 = self.attention.backward(&cache.attention, &dh)?;
        let mut dx = self.norm_attn.backward(&cache.norm_attn, &dn1)?;
        dx.add_assign(&dh)?;
        Ok(dx)
    }
}

/// Fixed sinusoidal position table `[T × d]`.
pub fn sinusoidal_positions<T: Scalar>(len: usize, d: usize) -> Tensor<T> {
    let mut pe = Tensor::zeros(&[len, d]);
    for pos in 0..len {
        for i in 0..d {
            let exponent = (2 * (i / 2)) as f64 / d as f64;
            let angle = pos as f64 / 10000f64.powf(exponent);
            pe[(pos, i)] = T::of(if i % 2 == 0 { angle.sin() } else { angle.cos() });
        }
    }
    pe
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn encoder_is_permutation_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let enc = EncoderLayer::<f64>::new(8, 2, 2, Activation::Gelu, &mut rng).unwrap();
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..8).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let x = Tensor::from_rows(&rows).unwrap();
        let perm = [2usize, 0, 3, 1];
        let xp = Tensor::from_rows(&perm.iter().map(|&i| rows[i].clone()).collect::<Vec<_>>()).unwrap();
        let y = enc.apply(&x).unwrap();
        let yp = enc.apply(&xp).unwrap();
        for (new, &old) in perm.iter().enumerate() {
            for (a, b) in yp.row(new).iter().zip(y.row(old)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn positions_are_bounded_and_distinct() {
        let pe = sinusoidal_positions::<f64>(6, 8);
        assert!(pe.max_abs() <= 1.0);
        assert_eq!(pe.row(0)[0], 0.0);
        assert_eq!(pe.row(0)[1], 1.0);
        assert_ne!(pe.row(1), pe.row(2));
    }
}

use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based uniform in `[0, 1)`: a pure function of `(seed, stream, index)`.
pub fn counter_uniform(seed: u64, stream: u64, index: u64) -> f64 {
    let h = splitmix64(seed ^ splitmix64(stream ^ splitmix64(index)));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Identifies one dropout application: masks are reproducible from this key alone.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DropoutKey {
    pub seed: u64,
    pub stream: u64,
}

impl DropoutKey {
    pub fn derive(self, salt: u64) -> Self {
        Self {
            seed: self.seed,
            stream: splitmix64(self.stream ^ salt.wrapping_mul(0xA24B_AED4_963E_E407)),
        }
    }
}

/// Inverted dropout. Returns the output and the (pre-scaled) mask for backward.
pub fn dropout<T: Scalar>(x: &Tensor<T>, rate: f64, key: DropoutKey) -> Result<(Tensor<T>, Tensor<T>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
    }
    let keep = T::of(1.0 / (1.0 - rate));
    let mut mask = Tensor::zeros(x.shape());
    for (i, m) in mask.data_mut().iter_mut().enumerate() {
        if counter_uniform(key.seed, key.stream, i as u64) >= rate {
            *m = keep;
        }
    }
    Ok((x.mul(&mask)?, mask))
}

use serde::{Deserialize, Serialize};

use super::param::Parameterized;
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// AdamW hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub weight_decay: f64,
    pub eps: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            lr: 3e-5,
            beta1: 0.91,
            beta2: 0.998,
            weight_decay: 1e-5,
            eps: 1e-8,
        }
    }
}

/// AdamW with decoupled weight decay and bias correction.
#[derive(Clone, Debug)]
pub struct AdamW<T> {
    pub config: AdamWConfig,
    step: u64,
    first: Vec<Tensor<T>>,
    second: Vec<Tensor<T>>,
}

impl<T: Scalar> AdamW<T> {
    pub fn new(config: AdamWConfig) -> Self {
        Self {
            config,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update of every parameter of `model` at learning rate `lr`, using the
    /// gradients currently accumulated in it.
    pub fn step<M: Parameterized<T> + ?Sized>(&mut self, model: &mut M, lr: f64) -> Result<()> {
        let mut params = model.params_mut();
        if self.first.is_empty() {
            self.first = params.iter().map(|(_, p)| Tensor::zeros(p.value.shape())).collect();
            self.second = self.first.clone();
        }
        if self.first.len() != params.len() {
            return Err(Error::shape(
                "adamw",
                format!(
                    "optimizer tracks {} tensors, model has {}",
                    self.first.len(),
                    params.len()
                ),
            ));
        }
        self.step += 1;
        let c = &self.config;
        let (b1, b2) = (T::of(c.beta1), T::of(c.beta2));
        let bc1 = T::of(1.0 - c.beta1.powi(self.step as i32));
        let bc2 = T::of(1.0 - c.beta2.powi(self.step as i32));
        let (lr, wd, eps) = (T::of(lr), T::of(c.weight_decay), T::of(c.eps));
        for (((name, p), m), v) in params.iter_mut().zip(&mut self.first).zip(&mut self.second) {
            if !m.same_shape(&p.value) {
                return Err(Error::shape("adamw", format!("moment shape mismatch for {name}")));
            }
            let (w, g) = (p.value.data_mut(), p.grad.data());
            for i in 0..w.len() {
                let gi = g[i];
                let mi = b1 * m.data()[i] + (T::one() - b1) * gi;
                let vi = b2 * v.data()[i] + (T::one() - b2) * gi * gi;
                m.data_mut()[i] = mi;
                v.data_mut()[i] = vi;
                let m_hat = mi / bc1;
                let v_hat = vi / bc2;
                w[i] -= lr * (m_hat / (v_hat.sqrt() + eps) + wd * w[i]);
            }
        }
        Ok(())
    }
}

/// Linear warmup from `base_lr / warmup_steps` to `base_lr` over the first
/// `warmup_steps` optimizer steps (1-based), constant afterwards.
pub fn lr_at_step(step: u64, base_lr: f64, warmup_steps: u64) -> f64 {
    if warmup_steps == 0 || step >= warmup_steps {
        base_lr
    } else {
        base_lr * step.max(1) as f64 / warmup_steps as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::param::{join, Param};

    struct Two {
        a: Param<f64>,
        b: Param<f64>,
    }

    impl Parameterized<f64> for Two {
        fn collect_params<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Param<f64>)>) {
            out.push((join(prefix, "a"), &self.a));
            out.push((join(prefix, "b"), &self.b));
        }
        fn collect_params_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<(String, &'a mut Param<f64>)>) {
            out.push((join(prefix, "a"), &mut self.a));
            out.push((join(prefix, "b"), &mut self.b));
        }
    }

    fn two(a: Vec<f64>, b: Vec<f64>) -> Two {
        Two {
            a: Param::new(Tensor::from_vec(&[a.len()], a).unwrap()),
            b: Param::new(Tensor::from_vec(&[b.len()], b).unwrap()),
        }
    }

    #[test]
    fn zero_gradient_only_decays() {
        let mut m = two(vec![2.0, -4.0], vec![1.0]);
        let cfg = AdamWConfig {
            lr: 0.1,
            weight_decay: 0.01,
            ..AdamWConfig::default()
        };
        AdamW::new(cfg).step(&mut m, cfg.lr).unwrap();
        let f = 1.0 - 0.1 * 0.01;
        assert!((m.a.value.data()[0] - 2.0 * f).abs() < 1e-15);
        assert!((m.a.value.data()[1] + 4.0 * f).abs() < 1e-15);
        assert!((m.b.value.data()[0] - f).abs() < 1e-15);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut m = two(vec![0.0, 0.0], vec![5.0]);
        m.a.grad = Tensor::from_vec(&[2], vec![3.0, -0.2]).unwrap();
        m.b.grad = Tensor::from_vec(&[1], vec![0.0]).unwrap();
        let cfg = AdamWConfig {
            lr: 0.01,
            weight_decay: 0.0,
            ..AdamWConfig::default()
        };
        AdamW::new(cfg).step(&mut m, cfg.lr).unwrap();
        assert!((m.a.value.data()[0] + 0.01).abs() < 1e-9);
        assert!((m.a.value.data()[1] - 0.01).abs() < 1e-9);
        // no cross-talk: untouched tensor with zero gradient stays put
        assert_eq!(m.b.value.data()[0], 5.0);
    }

    #[test]
    fn warmup_schedule() {
        assert_eq!(lr_at_step(1, 3e-5, 4), 3e-5 / 4.0);
        assert_eq!(lr_at_step(2, 3e-5, 4), 3e-5 / 2.0);
        assert_eq!(lr_at_step(4, 3e-5, 4), 3e-5);
        assert_eq!(lr_at_step(1000, 3e-5, 4), 3e-5);
        assert_eq!(lr_at_step(1, 1e-3, 0), 1e-3);
    }
}

use serde::{Deserialize, Serialize};

use super::layer::Layer;
use super::param::{Param, Parameterized};
use super::tensor::Tensor;
use crate::error::Result;
use crate::scalar::Scalar;

/// Logistic function, stable for large `|x|`.
pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Derivative of the logistic function expressed through its output.
pub fn sigmoid_grad_from_output<T: Scalar>(y: T) -> T {
    y * (T::one() - y)
}

fn gelu_parts<T: Scalar>(x: T) -> (T, T) {
    // tanh approximation
    let c = T::of((2.0 / std::f64::consts::PI).sqrt());
    let k = T::of(0.044715);
    let half = T::of(0.5);
    let inner = c * (x + k * x * x * x);
    let t = inner.tanh();
    let y = half * x * (T::one() + t);
    let dinner = c * (T::one() + T::of(3.0) * k * x * x);
    let dy = half * (T::one() + t) + half * x * (T::one() - t * t) * dinner;
    (y, dy)
}

/// Elementwise nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    #[default]
    Gelu,
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn eval<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Relu => x.max(T::zero()),
            Activation::Tanh => x.tanh(),
            Activation::Gelu => gelu_parts(x).0,
            Activation::Sigmoid => sigmoid(x),
            Activation::Identity => x,
        }
    }

    pub fn derivative<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Relu => {
                if x > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Tanh => {
                let t = x.tanh();
                T::one() - t * t
            }
            Activation::Gelu => gelu_parts(x).1,
            Activation::Sigmoid => sigmoid_grad_from_output(sigmoid(x)),
            Activation::Identity => T::one(),
        }
    }
}

impl<T: Scalar> Parameterized<T> for Activation {
    fn collect_params<'a>(&'a self, _: &str, _: &mut Vec<(String, &'a Param<T>)>) {}
    fn collect_params_mut<'a>(&'a mut self, _: &str, _: &mut Vec<(String, &'a mut Param<T>)>) {}
}

impl<T: Scalar> Layer<T> for Activation {
    /// The pre-activation input.
    type Cache = Tensor<T>;

    fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>)> {
        let act = *self;
        Ok((x.map(|v| act.eval(v)), x.clone()))
    }

    fn backward(&mut self, x: &Tensor<T>, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let act = *self;
        dy.zip_map(x, |g, v| g * act.derivative(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_reference_points() {
        assert_eq!(sigmoid(0.0f64), 0.5);
        assert_eq!(sigmoid(1000.0f64), 1.0);
        assert_eq!(sigmoid(-1000.0f64), 0.0);
        assert!(sigmoid(-1000.0f64).is_finite());
        assert_eq!(Activation::Sigmoid.derivative(0.0f64), 0.25);
    }

    #[test]
    fn activations_are_finite_at_extremes() {
        for act in [
            Activation::Relu,
            Activation::Tanh,
            Activation::Gelu,
            Activation::Sigmoid,
        ] {
            for x in [-1000.0f64, 1000.0] {
                assert!(act.eval(x).is_finite(), "{act:?} at {x}");
                assert!(act.derivative(x).is_finite(), "{act:?}' at {x}");
            }
        }
    }

    #[test]
    fn gelu_derivative_matches_central_difference() {
        let h = 1e-6;
        for &x in &[-3.0f64, -0.7, 0.0, 0.4, 2.5] {
            let num = (Activation::Gelu.eval(x + h) - Activation::Gelu.eval(x - h)) / (2.0 * h);
            assert!((num - Activation::Gelu.derivative(x)).abs() < 1e-8);
        }
    }
}

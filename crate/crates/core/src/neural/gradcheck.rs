//! Central finite-difference verification of hand-written backward passes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layer::Layer;
use super::param::Parameterized;
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `|a − n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Outcome of one gradient check.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub name: String,
    pub max_rel_error: f64,
    /// Name of the tensor holding the worst entry (`input[k]` for inputs).
    pub worst: String,
    pub checked: usize,
}

impl GradCheckReport {
    pub fn passes(&self, threshold: f64) -> bool {
        self.max_rel_error < threshold
    }
}

/// Compares analytic gradients against `(f(θ+ε) − f(θ−ε)) / 2ε` for every parameter
/// entry of `model` and every entry of `inputs`.
///
/// `loss` evaluates the scalar objective. `analytic` must accumulate parameter
/// gradients into `model` (they are zeroed beforehand) and return the gradient for
/// each input tensor, in order.
pub fn gradient_check<T, M, L, A>(
    name: &str,
    model: &mut M,
    inputs: &mut [Tensor<T>],
    eps: f64,
    loss: L,
    analytic: A,
) -> Result<GradCheckReport>
where
    T: Scalar,
    M: Parameterized<T>,
    L: Fn(&M, &[Tensor<T>]) -> Result<T>,
    A: Fn(&mut M, &[Tensor<T>]) -> Result<Vec<Tensor<T>>>,
{
    model.zero_grad();
    let input_grads = analytic(model, inputs)?;
    if input_grads.len() != inputs.len() {
        return Err(Error::shape(
            "gradient_check",
            format!("{} input gradients for {} inputs", input_grads.len(), inputs.len()),
        ));
    }
    let param_grads: Vec<(String, Vec<f64>)> = model
        .params()
        .into_iter()
        .map(|(n, p)| (n, p.grad.data().iter().map(|g| g.as_f64()).collect()))
        .collect();

    let eval = |model: &M, inputs: &[Tensor<T>]| -> Result<f64> {
        let v = loss(model, inputs)?.as_f64();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(format!("gradient check loss for {name}")))
        }
    };
    let step = T::of(eps);

    let mut report = GradCheckReport {
        name: name.to_string(),
        max_rel_error: 0.0,
        worst: String::new(),
        checked: 0,
    };
    let mut record = |tensor: &str, a: f64, n: f64| {
        if !a.is_finite() {
            return Err(Error::NonFinite(format!("analytic gradient of {tensor}")));
        }
        let e = relative_error(a, n);
        if e > report.max_rel_error || report.checked == 0 {
            report.max_rel_error = report.max_rel_error.max(e);
            report.worst = tensor.to_string();
        }
        report.checked += 1;
        Ok(())
    };

    for (pi, (pname, grads)) in param_grads.iter().enumerate() {
        for (i, &a) in grads.iter().enumerate() {
            let original = model.params()[pi].1.value.data()[i];
            set_param(model, pi, i, original + step);
            let plus = eval(model, inputs)?;
            set_param(model, pi, i, original - step);
            let minus = eval(model, inputs)?;
            set_param(model, pi, i, original);
            record(pname, a, (plus - minus) / (2.0 * eps))?;
        }
    }

    for k in 0..inputs.len() {
        let label = format!("input[{k}]");
        for i in 0..inputs[k].len() {
            let original = inputs[k].data()[i];
            inputs[k].data_mut()[i] = original + step;
            let plus = eval(model, inputs)?;
            inputs[k].data_mut()[i] = original - step;
            let minus = eval(model, inputs)?;
            inputs[k].data_mut()[i] = original;
            record(&label, input_grads[k].data()[i].as_f64(), (plus - minus) / (2.0 * eps))?;
        }
    }
    Ok(report)
}

fn set_param<T: Scalar, M: Parameterized<T>>(model: &mut M, param: usize, index: usize, value: T) {
    let mut params = model.params_mut();
    params[param].1.value.data_mut()[index] = value;
}

/// Fixed random upstream gradient used to turn a tensor-valued layer into the
/// scalar objective `Σ y ⊙ R`.
pub fn random_projection<T: Scalar>(shape: &[usize], seed: u64) -> Tensor<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| T::of(rng.random_range(-1.0..1.0))).collect();
    Tensor::from_vec(shape, data).expect("shape product matches")
}

pub fn random_input<T: Scalar>(shape: &[usize], scale: f64, seed: u64) -> Tensor<T> {
    random_projection::<T>(shape, seed).scale(T::of(scale))
}

/// Gradient check of any [`Layer`] on a single input under `Σ layer(x) ⊙ R`.
pub fn check_layer<T: Scalar, L: Layer<T>>(
    name: &str,
    layer: &mut L,
    input: Tensor<T>,
    eps: f64,
    seed: u64,
) -> Result<GradCheckReport> {
    let out_shape = layer.apply(&input)?.shape().to_vec();
    let projection = random_projection::<T>(&out_shape, seed);
    let mut inputs = vec![input];
    gradient_check(
        name,
        layer,
        &mut inputs,
        eps,
        |l, xs| Ok(l.apply(&xs[0])?.mul(&projection)?.sum()),
        |l, xs| {
            let (_, cache) = l.forward(&xs[0])?;
            Ok(vec![l.backward(&cache, &projection)?])
        },
    )
}

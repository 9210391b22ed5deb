use rand::Rng;

use super::activation::sigmoid;
use super::layer::Layer;
use super::param::{join, Param, Parameterized};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One LSTM direction. Gate blocks in the `4h` axis are ordered input, forget,
/// candidate, output.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmCell<T> {
    pub w_input: Param<T>,
    pub w_hidden: Param<T>,
    pub bias: Param<T>,
    hidden: usize,
}

#[derive(Clone, Debug)]
pub struct LstmCache<T> {
    /// Input rows in processing order.
    inputs: Tensor<T>,
    /// `h_{t-1}` rows in processing order.
    prev_hidden: Tensor<T>,
    prev_cell: Tensor<T>,
    /// Post-nonlinearity gates `[i f g o]`, one row per step.
    gates: Tensor<T>,
    cell_tanh: Tensor<T>,
}

impl<T: Scalar> LstmCell<T> {
    pub fn new(d_in: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let mut bias = Param::zeros(&[4 * hidden]);
        for b in &mut bias.value.data_mut()[hidden..2 * hidden] {
            *b = T::one();
        }
        Self {
            w_input: Param::xavier(d_in, 4 * hidden, &[d_in, 4 * hidden], rng),
            w_hidden: Param::xavier(hidden, 4 * hidden, &[hidden, 4 * hidden], rng),
            bias,
            hidden,
        }
    }

    /// All weights and biases zero.
    pub fn zeroed(d_in: usize, hidden: usize) -> Self {
        Self {
            w_input: Param::zeros(&[d_in, 4 * hidden]),
            w_hidden: Param::zeros(&[hidden, 4 * hidden]),
            bias: Param::zeros(&[4 * hidden]),
            hidden,
        }
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn d_in(&self) -> usize {
        self.w_input.value.rows()
    }

    /// Runs the recurrence over `x` rows in the given order, returning hidden states
    /// in that same order.
    fn run(&self, x: &Tensor<T>) -> Result<(Tensor<T>, LstmCache<T>)> {
        let h = self.hidden;
        let steps = x.rows();
        let pre = x.matmul(&self.w_input.value)?.add_row_vector(&self.bias.value)?;
        let mut gates = Tensor::zeros(&[steps, 4 * h]);
        let mut prev_hidden = Tensor::zeros(&[steps, h]);
        let mut prev_cell = Tensor::zeros(&[steps, h]);
        let mut cell_tanh = Tensor::zeros(&[steps, h]);
        let mut out = Tensor::zeros(&[steps, h]);
        let mut h_prev = vec![T::zero(); h];
        let mut c_prev = vec![T::zero(); h];
        for t in 0..steps {
            prev_hidden.row_mut(t).copy_from_slice(&h_prev);
            prev_cell.row_mut(t).copy_from_slice(&c_prev);
            let mut z = pre.row(t).to_vec();
            for (k, &hv) in h_prev.iter().enumerate() {
                if hv == T::zero() {
                    continue;
                }
                for (zj, &w) in z.iter_mut().zip(self.w_hidden.value.row(k)) {
                    *zj += hv * w;
                }
            }
            let g_row = gates.row_mut(t);
            for j in 0..h {
                g_row[j] = sigmoid(z[j]);
                g_row[h + j] = sigmoid(z[h + j]);
                g_row[2 * h + j] = z[2 * h + j].tanh();
                g_row[3 * h + j] = sigmoid(z[3 * h + j]);
            }
            for j in 0..h {
                let (i, f, g, o) = (g_row[j], g_row[h + j], g_row[2 * h + j], g_row[3 * h + j]);
                let c = f * c_prev[j] + i * g;
                let tc = c.tanh();
                c_prev[j] = c;
                h_prev[j] = o * tc;
                cell_tanh[(t, j)] = tc;
            }
            out.row_mut(t).copy_from_slice(&h_prev);
        }
        Ok((
            out,
            LstmCache {
                inputs: x.clone(),
                prev_hidden,
                prev_cell,
                gates,
                cell_tanh,
            },
        ))
    }

    /// Backpropagation through time; `dy` rows follow processing order.
    fn run_backward(&mut self, cache: &LstmCache<T>, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let h = self.hidden;
        let steps = cache.inputs.rows();
        let mut dz = Tensor::zeros(&[steps, 4 * h]);
        let mut dh_next = vec![T::zero(); h];
        let mut dc_next = vec![T::zero(); h];
        for t in (0..steps).rev() {
            let g_row = cache.gates.row(t);
            let mut dz_row = vec![T::zero(); 4 * h];
            for j in 0..h {
                let (i, f, g, o) = (g_row[j], g_row[h + j], g_row[2 * h + j], g_row[3 * h + j]);
                let tc = cache.cell_tanh[(t, j)];
                let dh = dy[(t, j)] + dh_next[j];
                let dc = dh * o * (T::one() - tc * tc) + dc_next[j];
                dz_row[j] = dc * g * i * (T::one() - i);
                dz_row[h + j] = dc * cache.prev_cell[(t, j)] * f * (T::one() - f);
                dz_row[2 * h + j] = dc * i * (T::one() - g * g);
                dz_row[3 * h + j] = dh * tc * o * (T::one() - o);
                dc_next[j] = dc * f;
            }
            for (k, dh) in dh_next.iter_mut().enumerate() {
                *dh = self
                    .w_hidden
                    .value
                    .row(k)
                    .iter()
                    .zip(&dz_row)
                    .map(|(&w, &d)| w * d)
                    .sum();
            }
            dz.row_mut(t).copy_from_slice(&dz_row);
        }
        self.w_input.accumulate(&cache.inputs.matmul_tn(&dz)?);
        self.w_hidden.accumulate(&cache.prev_hidden.matmul_tn(&dz)?);
        self.bias.accumulate(&dz.sum_rows());
        dz.matmul_nt(&self.w_input.value)
    }
}

impl<T: Scalar> Parameterized<T> for LstmCell<T> {
    fn collect_params<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Param<T>)>) {
        out.push((join(prefix, "w_input"), &self.w_input));
        out.push((join(prefix, "w_hidden"), &self.w_hidden));
        out.push((join(prefix, "bias"), &self.bias));
    }

    fn collect_params_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<(String, &'a mut Param<T>)>) {
        out.push((join(prefix, "w_input"), &mut self.w_input));
        out.push((join(prefix, "w_hidden"), &mut self.w_hidden));
        out.push((join(prefix, "bias"), &mut self.bias));
    }
}

fn reverse_rows<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let mut out = x.clone();
    let n = x.rows();
    for r in 0..n {
        out.row_mut(r).copy_from_slice(x.row(n - 1 - r));
    }
    out
}

/// Bidirectional LSTM over a `[T × d_in]` sequence. Output row `t` is
/// `[forward_h_t, backward_h_t]` of width `2·hidden`.
#[derive(Clone, Debug, PartialEq)]
pub struct BiLstm<T> {
    pub forward_cell: LstmCell<T>,
    pub backward_cell: LstmCell<T>,
}

#[derive(Clone, Debug)]
pub struct BiLstmCache<T> {
    forward: LstmCache<T>,
    backward: LstmCache<T>,
}

impl<T: Scalar> BiLstm<T> {
    pub fn new(d_in: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        Self {
            forward_cell: LstmCell::new(d_in, hidden, rng),
            backward_cell: LstmCell::new(d_in, hidden, rng),
        }
    }

    pub fn zeroed(d_in: usize, hidden: usize) -> Self {
        Self {
            forward_cell: LstmCell::zeroed(d_in, hidden),
            backward_cell: LstmCell::zeroed(d_in, hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.forward_cell.hidden()
    }

    pub fn output_dim(&self) -> usize {
        2 * self.hidden()
    }
}

impl<T: Scalar> Parameterized<T> for BiLstm<T> {
    fn collect_params<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Param<T>)>) {
        self.forward_cell.collect_params(&join(prefix, "forward"), out);
        self.backward_cell.collect_params(&join(prefix, "backward"), out);
    }

    fn collect_params_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<(String, &'a mut Param<T>)>) {
        self.forward_cell.collect_params_mut(&join(prefix, "forward"), out);
        self.backward_cell.collect_params_mut(&join(prefix, "backward"), out);
    }
}

impl<T: Scalar> Layer<T> for BiLstm<T> {
    type Cache = BiLstmCache<T>;

    fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, BiLstmCache<T>)> {
        if x.rows() == 0 {
            return Err(Error::shape("bilstm", "empty sequence"));
        }
        if x.cols() != self.forward_cell.d_in() {
            return Err(Error::shape(
                "bilstm",
                format!(
                    "input width {} for cell expecting {}",
                    x.cols(),
                    self.forward_cell.d_in()
                ),
            ));
        }
        let (fwd, forward) = self.forward_cell.run(x)?;
        let (bwd_rev, backward) = self.backward_cell.run(&reverse_rows(x))?;
        let y = fwd.concat_cols(&reverse_rows(&bwd_rev))?;
        Ok((y, BiLstmCache { forward, backward }))
    }

    fn backward(&mut self, cache: &BiLstmCache<T>, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let h = self.hidden();
        let dfwd = dy.columns(0, h);
        let dbwd_rev = reverse_rows(&dy.columns(h, h));
        let mut dx = self.forward_cell.run_backward(&cache.forward, &dfwd)?;
        let dx_rev = self.backward_cell.run_backward(&cache.backward, &dbwd_rev)?;
        dx.add_assign(&reverse_rows(&dx_rev))?;
        Ok(dx)
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn zero_parameters_give_zero_outputs() {
        let lstm = BiLstm::<f64>::zeroed(3, 4);
        let x = Tensor::matrix(5, 3, (0..15).map(|i| i as f64 - 7.0).collect()).unwrap();
        let y = lstm.apply(&x).unwrap();
        assert_eq!(y.shape(), &[5, 8]);
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_step_directions_see_same_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut lstm = BiLstm::<f64>::new(3, 2, &mut rng);
        lstm.backward_cell = lstm.forward_cell.clone();
        let x = Tensor::matrix(1, 3, vec![0.5, -0.25, 1.0]).unwrap();
        let y = lstm.apply(&x).unwrap();
        assert_eq!(y.row(0)[..2], y.row(0)[2..]);
    }

    #[test]
    fn forget_bias_starts_at_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cell = LstmCell::<f64>::new(2, 3, &mut rng);
        let b = cell.bias.value.data();
        assert!(b[..3].iter().all(|&v| v == 0.0));
        assert!(b[3..6].iter().all(|&v| v == 1.0));
        assert!(b[6..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_sequence_rejected() {
        let lstm = BiLstm::<f64>::zeroed(2, 2);
        assert!(lstm.apply(&Tensor::zeros(&[0, 2])).is_err());
    }
}

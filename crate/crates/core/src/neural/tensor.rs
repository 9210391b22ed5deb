use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major tensor. Most operations treat it as a `rows × cols` matrix;
/// a 1-D tensor of length `n` behaves as a `1 × n` row.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::shape(
                "tensor",
                format!("shape {shape:?} needs {expected} values, got {}", data.len()),
            ));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![T::zero(); shape.iter().product()],
        }
    }

    pub fn full(shape: &[usize], value: T) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![value; shape.iter().product()],
        }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        Self::from_vec(&[rows, cols], data)
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::shape(
                    "from_rows",
                    format!("row {i} has {} columns, expected {cols}", row.len()),
                ));
            }
            data.extend_from_slice(row);
        }
        Self::matrix(rows.len(), cols, data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn rows(&self) -> usize {
        match self.shape.len() {
            0 => 1,
            1 => 1,
            _ => self.shape[..self.shape.len() - 1].iter().product(),
        }
    }

    pub fn cols(&self) -> usize {
        self.shape.last().copied().unwrap_or(1)
    }

    pub fn row(&self, r: usize) -> &[T] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        let c = self.cols();
        &mut self.data[r * c..(r + 1) * c]
    }

    pub fn at(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols() + c]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.shape == other.shape
    }

    fn ensure_same_shape(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::shape(op, format!("{:?} vs {:?}", self.shape, other.shape)))
        }
    }

    /// `self · other` for `[n×k]·[k×m]`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        let (n, k) = (self.rows(), self.cols());
        let (k2, m) = (other.rows(), other.cols());
        if k != k2 {
            return Err(Error::shape("matmul", format!("[{n}x{k}] · [{k2}x{m}]")));
        }
        let mut out = vec![T::zero(); n * m];
        for i in 0..n {
            let a_row = &self.data[i * k..(i + 1) * k];
            let o_row = &mut out[i * m..(i + 1) * m];
            for (p, &a) in a_row.iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                let b_row = &other.data[p * m..(p + 1) * m];
                for (o, &b) in o_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Self::matrix(n, m, out)
    }

    /// `selfᵀ · other` for `[k×n]ᵀ·[k×m]`.
    pub fn matmul_tn(&self, other: &Self) -> Result<Self> {
        let (k, n) = (self.rows(), self.cols());
        let (k2, m) = (other.rows(), other.cols());
        if k != k2 {
            return Err(Error::shape("matmul_tn", format!("[{k}x{n}]ᵀ · [{k2}x{m}]")));
        }
        let mut out = vec![T::zero(); n * m];
        for p in 0..k {
            let a_row = &self.data[p * n..(p + 1) * n];
            let b_row = &other.data[p * m..(p + 1) * m];
            for (i, &a) in a_row.iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                let o_row = &mut out[i * m..(i + 1) * m];
                for (o, &b) in o_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Self::matrix(n, m, out)
    }

    /// `self · otherᵀ` for `[n×k]·[m×k]ᵀ`.
    pub fn matmul_nt(&self, other: &Self) -> Result<Self> {
        let (n, k) = (self.rows(), self.cols());
        let (m, k2) = (other.rows(), other.cols());
        if k != k2 {
            return Err(Error::shape("matmul_nt", format!("[{n}x{k}] · [{m}x{k2}]ᵀ")));
        }
        let mut out = vec![T::zero(); n * m];
        for i in 0..n {
            let a_row = &self.data[i * k..(i + 1) * k];
            for j in 0..m {
                let b_row = &other.data[j * k..(j + 1) * k];
                out[i * m + j] = a_row.iter().zip(b_row).map(|(&a, &b)| a * b).sum();
            }
        }
        Self::matrix(n, m, out)
    }

    pub fn transpose(&self) -> Self {
        let (n, m) = (self.rows(), self.cols());
        let mut out = vec![T::zero(); n * m];
        for i in 0..n {
            for j in 0..m {
                out[j * n + i] = self.data[i * m + j];
            }
        }
        Self {
            shape: vec![m, n],
            data: out,
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.ensure_same_shape(other, "zip_map")?;
        Ok(Self {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        self.ensure_same_shape(other, "add_assign")?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    /// Adds a length-`cols` vector to every row.
    pub fn add_row_vector(&self, v: &Self) -> Result<Self> {
        let c = self.cols();
        if v.len() != c {
            return Err(Error::shape(
                "add_row_vector",
                format!("row vector of {} for {c} columns", v.len()),
            ));
        }
        let mut out = self.clone();
        for row in out.data.chunks_mut(c) {
            for (x, &b) in row.iter_mut().zip(&v.data) {
                *x += b;
            }
        }
        Ok(out)
    }

    /// Column sums as a 1-D tensor.
    pub fn sum_rows(&self) -> Self {
        let c = self.cols();
        let mut out = vec![T::zero(); c];
        for row in self.data.chunks(c.max(1)) {
            for (o, &x) in out.iter_mut().zip(row) {
                *o += x;
            }
        }
        Self {
            shape: vec![c],
            data: out,
        }
    }

    pub fn sum(&self) -> T {
        self.data.iter().copied().sum()
    }

    /// Columns `[start, start + width)` of a matrix.
    pub fn columns(&self, start: usize, width: usize) -> Self {
        let (n, c) = (self.rows(), self.cols());
        let mut out = Vec::with_capacity(n * width);
        for i in 0..n {
            out.extend_from_slice(&self.data[i * c + start..i * c + start + width]);
        }
        Self {
            shape: vec![n, width],
            data: out,
        }
    }

    /// Writes `block` into columns starting at `start`.
    pub fn set_columns(&mut self, start: usize, block: &Self) {
        let c = self.cols();
        let w = block.cols();
        for i in 0..self.rows() {
            self.data[i * c + start..i * c + start + w].copy_from_slice(block.row(i));
        }
    }

    /// Horizontal concatenation of two matrices with equal row counts.
    pub fn concat_cols(&self, other: &Self) -> Result<Self> {
        if self.rows() != other.rows() {
            return Err(Error::shape(
                "concat_cols",
                format!("{} rows vs {} rows", self.rows(), other.rows()),
            ));
        }
        let (a, b) = (self.cols(), other.cols());
        let mut out = Self::zeros(&[self.rows(), a + b]);
        out.set_columns(0, self);
        out.set_columns(a, other);
        Ok(out)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Errors with `NonFinite` if any element is NaN or infinite.
    pub fn check_finite(&self, context: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(context.to_string()))
        }
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| U::of(x.as_f64())).collect(),
        }
    }
}

impl<T: Scalar> Index<(usize, usize)> for Tensor<T> {
    type Output = T;
    fn index(&self, (r, c): (usize, usize)) -> &T {
        let cols = self.cols();
        &self.data[r * cols + c]
    }
}

impl<T: Scalar> IndexMut<(usize, usize)> for Tensor<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        let cols = self.cols();
        &mut self.data[r * cols + c]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, v: &[f64]) -> Tensor<f64> {
        Tensor::matrix(rows, cols, v.to_vec()).unwrap()
    }

    #[test]
    fn matmul_variants_agree() {
        let a = m(2, 3, &[1., 2., 3., 4., 5., 6.]);
        let b = m(3, 2, &[7., 8., 9., 10., 11., 12.]);
        let ab = a.matmul(&b).unwrap();
        assert_eq!(ab.data(), &[58., 64., 139., 154.]);
        assert_eq!(a.transpose().matmul_tn(&b).unwrap(), ab);
        assert_eq!(a.matmul_nt(&b.transpose()).unwrap(), ab);
    }

    #[test]
    fn shape_errors() {
        let a = m(2, 3, &[0.; 6]);
        assert!(a.matmul(&a).is_err());
        assert!(Tensor::<f64>::from_vec(&[2, 2], vec![1.0]).is_err());
        assert!(a.add(&a.transpose()).is_err());
    }

    #[test]
    fn column_blocks_round_trip() {
        let a = m(2, 4, &[1., 2., 3., 4., 5., 6., 7., 8.]);
        let left = a.columns(0, 1);
        let right = a.columns(1, 3);
        assert_eq!(left.concat_cols(&right).unwrap(), a);
        assert_eq!(a.sum_rows().data(), &[6., 8., 10., 12.]);
    }

    #[test]
    fn non_finite_is_reported() {
        let a = m(1, 2, &[1.0, f64::NAN]);
        assert!(matches!(a.check_finite("x"), Err(Error::NonFinite(_))));
    }
}

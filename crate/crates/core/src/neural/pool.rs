use super::tensor::Tensor;
use crate::error::Result;
use crate::scalar::Scalar;

/// Per-token mean of two equally shaped representations: `(a + b) / 2`.
pub fn mean_pool<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let half = T::of(0.5);
    a.zip_map(b, |x, y| (x + y) * half)
}

/// Gradient of [`mean_pool`] with respect to either argument.
pub fn mean_pool_backward<T: Scalar>(dy: &Tensor<T>) -> Tensor<T> {
    dy.scale(T::of(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_pool_identities() {
        let a = Tensor::<f64>::matrix(2, 2, vec![1.0, -2.0, 3.5, 4.0]).unwrap();
        let neg = a.scale(-1.0);
        assert_eq!(mean_pool(&a, &a).unwrap(), a);
        assert!(mean_pool(&a, &neg).unwrap().data().iter().all(|&v| v == 0.0));
        let b = Tensor::matrix(2, 2, vec![0.5, 0.5, -1.0, 2.0]).unwrap();
        assert_eq!(mean_pool(&a, &b).unwrap(), mean_pool(&b, &a).unwrap());
        // linear in the first argument
        let lhs = mean_pool(&a.scale(3.0), &b).unwrap();
        let rhs = mean_pool(&a, &b).unwrap().add(&a.scale(1.0)).unwrap();
        for (x, y) in lhs.data().iter().zip(rhs.data()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(mean_pool(&a, &Tensor::zeros(&[1, 2])).is_err());
    }
}

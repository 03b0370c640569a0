//! Vandermonde interpolation by progressive elimination (Björck–Pereyra).

use crate::linalg::Matrix;
use crate::scalar::Real;

/// Returns the coefficients `a` of the polynomial `Σ_p a_p x^p` that takes the
/// value `rhs[i]` at `nodes[i]`, i.e. solves `V a = rhs` with `V_ip = x_i^p`.
///
/// Nodes must be pairwise distinct; accuracy is best when they are positive
/// and increasing.
pub fn bjorck_pereyra<T: Real>(nodes: &[T], rhs: &[T]) -> Vec<T> {
    let n = nodes.len();
    assert_eq!(n, rhs.len(), "one value per node");
    let mut a = rhs.to_vec();
    // Newton divided differences.
    for k in 0..n.saturating_sub(1) {
        for i in (k + 1..n).rev() {
            a[i] = (a[i] - a[i - 1]) / (nodes[i] - nodes[i - k - 1]);
        }
    }
    // Newton form to monomial form.
    for k in (0..n.saturating_sub(1)).rev() {
        for i in k..n - 1 {
            a[i] = a[i] - a[i + 1] * nodes[k];
        }
    }
    a
}

/// `V_ip = x_i^p` for `p < cols`.
pub fn vandermonde_matrix<T: Real>(nodes: &[T], cols: usize) -> Matrix<T> {
    Matrix::from_fn(nodes.len(), cols, |i, p| nodes[i].powi(p as i32))
}

/// `||V||₁ ||V⁻¹||₁` for a square Vandermonde matrix, the inverse built
/// column by column with [`bjorck_pereyra`].
pub fn condition_one_square<T: Real>(nodes: &[T]) -> T {
    let n = nodes.len();
    let v = vandermonde_matrix(nodes, n);
    let mut inv_norm = T::zero();
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e.iter_mut().for_each(|x| *x = T::zero());
        e[j] = T::one();
        let col = bjorck_pereyra(nodes, &e);
        let s = col.iter().fold(T::zero(), |s, x| s + x.abs());
        inv_norm = inv_norm.max(s);
    }
    v.norm_one() * inv_norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_quadratic() {
        let nodes = [0.5, 1.0, 2.0];
        let rhs: Vec<f64> = nodes.iter().map(|x| 3.0 - 2.0 * x + 0.5 * x * x).collect();
        let a = bjorck_pereyra(&nodes, &rhs);
        assert!((a[0] - 3.0).abs() < 1e-14);
        assert!((a[1] + 2.0).abs() < 1e-14);
        assert!((a[2] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn one_by_one() {
        assert_eq!(bjorck_pereyra(&[2.5], &[7.0]), vec![7.0]);
        assert_eq!(condition_one_square(&[2.5]), 1.0);
    }

    #[test]
    fn inverse_columns_invert() {
        let nodes = [0.3f64, 0.9, 1.4, 2.2];
        let v = vandermonde_matrix(&nodes, 4);
        for j in 0..4 {
            let mut e = vec![0.0; 4];
            e[j] = 1.0;
            let col = bjorck_pereyra(&nodes, &e);
            let back = v.mul_vec(&col);
            for (i, b) in back.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((b - want).abs() < 1e-12);
            }
        }
    }
}

//! Small dense kernels: row-major matrices and Householder least squares.

use crate::error::{CprError, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> T {
        (0..self.cols)
            .map(|j| (0..self.rows).fold(T::zero(), |s, i| s + self[(i, j)].abs()))
            .fold(T::zero(), T::max)
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|i| (0..self.cols).fold(T::zero(), |s, j| s + self[(i, j)] * x[j]))
            .collect()
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Householder QR factorization of a tall (`rows >= cols`) matrix.
pub struct HouseholderQr<T> {
    qr: Matrix<T>,
    /// Householder vectors stored below the diagonal; their leading entries
    /// and scalings live here.
    v_head: Vec<T>,
    tau: Vec<T>,
    diag: Vec<T>,
}

impl<T: Real> HouseholderQr<T> {
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        let (m, n) = (a.rows, a.cols);
        if m < n {
            return Err(CprError::DimensionMismatch(format!(
                "least squares needs rows >= cols, got {m}x{n}"
            )));
        }
        let mut qr = a.clone();
        let mut v_head = vec![T::zero(); n];
        let mut tau = vec![T::zero(); n];
        let mut diag = vec![T::zero(); n];
        for k in 0..n {
            let norm = (k..m).fold(T::zero(), |s, i| s.hypot(qr[(i, k)]));
            if norm == T::zero() {
                diag[k] = T::zero();
                continue;
            }
            let x0 = qr[(k, k)];
            let alpha = if x0 >= T::zero() { -norm } else { norm };
            // v = x - alpha e1, H = I - tau v v^T with tau = 2 / (v^T v)
            let v0 = x0 - alpha;
            let vtv = v0 * v0 + (k + 1..m).fold(T::zero(), |s, i| s + qr[(i, k)] * qr[(i, k)]);
            let t = T::lit(2.0) / vtv;
            v_head[k] = v0;
            tau[k] = t;
            diag[k] = alpha;
            for j in k + 1..n {
                let dot = v0 * qr[(k, j)]
                    + (k + 1..m).fold(T::zero(), |s, i| s + qr[(i, k)] * qr[(i, j)]);
                let f = t * dot;
                qr[(k, j)] = qr[(k, j)] - f * v0;
                for i in k + 1..m {
                    let vi = qr[(i, k)];
                    qr[(i, j)] = qr[(i, j)] - f * vi;
                }
            }
        }
        Ok(Self {
            qr,
            v_head,
            tau,
            diag,
        })
    }

    /// Smallest `|R_ii| / max |R_jj|`, a cheap rank indicator.
    pub fn diag_ratio(&self) -> T {
        let max = self.diag.iter().fold(T::zero(), |m, d| m.max(d.abs()));
        if max == T::zero() {
            return T::zero();
        }
        self.diag.iter().fold(T::infinity(), |m, d| m.min(d.abs())) / max
    }

    /// Minimizes `||A x - b||₂`.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let (m, n) = (self.qr.rows, self.qr.cols);
        if b.len() != m {
            return Err(CprError::DimensionMismatch(format!(
                "rhs has {} entries, matrix has {m} rows",
                b.len()
            )));
        }
        let mut y = b.to_vec();
        for k in 0..n {
            if self.tau[k] == T::zero() {
                continue;
            }
            let v0 = self.v_head[k];
            let dot = v0 * y[k] + (k + 1..m).fold(T::zero(), |s, i| s + self.qr[(i, k)] * y[i]);
            let f = self.tau[k] * dot;
            y[k] = y[k] - f * v0;
            for (i, yi) in y.iter_mut().enumerate().take(m).skip(k + 1) {
                *yi = *yi - f * self.qr[(i, k)];
            }
        }
        let mut x = vec![T::zero(); n];
        for k in (0..n).rev() {
            let d = self.diag[k];
            if d == T::zero() {
                return Err(CprError::RankDeficient {
                    gap: 0.0,
                    threshold: 0.0,
                });
            }
            let s = (k + 1..n).fold(y[k], |s, j| s - self.qr[(k, j)] * x[j]);
            x[k] = s / d;
        }
        Ok(x)
    }
}

/// Least-squares solution of `A x ≈ b` via Householder QR.
pub fn lstsq<T: Real>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    HouseholderQr::new(a)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_solve() {
        let a = Matrix::from_fn(3, 3, |i, j| {
            [[4.0f64, 1.0, 0.5], [1.0, 3.0, -1.0], [0.5, -1.0, 2.0]][i][j]
        });
        let x_true = [1.0, -2.0, 0.5];
        let b = a.mul_vec(&x_true);
        let x = lstsq(&a, &b).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn overdetermined_line_fit() {
        let xs = [0.0f64, 1.0, 2.0, 3.0];
        let ys = [1.0f64, 3.1, 4.9, 7.0];
        let a = Matrix::from_fn(4, 2, |i, j| if j == 0 { 1.0 } else { xs[i] });
        let x = lstsq(&a, &ys).unwrap();
        // normal equations by hand: slope 1.98, intercept 1.03
        assert!((x[1] - 1.98).abs() < 1e-12);
        assert!((x[0] - 1.03).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_detected() {
        let a = Matrix::from_fn(3, 2, |i, _| i as f64);
        let qr = HouseholderQr::new(&a).unwrap();
        assert!(qr.diag_ratio() < 1e-14);
    }

    #[test]
    fn norm_one_is_max_column_sum() {
        let a = Matrix::from_fn(2, 2, |i, j| [[1.0, -4.0], [2.0, 1.0]][i][j]);
        assert_eq!(a.norm_one(), 5.0);
    }
}

//! Damped least-squares polish of tilde coefficients against `(A, B)`.
//!
//! Residuals are weighted entry by entry with the magnitude of the terms
//! that make up that entry, so every `A_m`, `B_m` counts at its own scale.
//! The recursion leaves its largest errors at the far end of the window,
//! where those entries are tiny; an unweighted fit would not see them.

use crate::autocorr::{split_autocorr, AutocorrData};
use crate::linalg::{HouseholderQr, Matrix};
use crate::scalar::Real;

const MAX_ITERATIONS: usize = 100;
/// Iterations over which the cost must at least halve to keep going.
const STALL_WINDOW: usize = 8;

/// Free parameters: all real parts plus the imaginary parts from index
/// `free_im_from` on (earlier imaginary parts stay at zero).
struct Layout {
    len: usize,
    free_im_from: usize,
}

impl Layout {
    fn count(&self) -> usize {
        self.len + self.len.saturating_sub(self.free_im_from)
    }

    fn unpack<T: Real>(&self, theta: &[T]) -> (Vec<T>, Vec<T>) {
        let x = theta[..self.len].to_vec();
        let mut y = vec![T::zero(); self.len];
        for (j, v) in theta[self.len..].iter().enumerate() {
            y[self.free_im_from + j] = *v;
        }
        (x, y)
    }

    fn pack<T: Real>(&self, x: &[T], y: &[T]) -> Vec<T> {
        let mut theta = x.to_vec();
        theta.extend_from_slice(&y[self.free_im_from.min(self.len)..]);
        theta
    }
}

/// Per-entry scales `Σ_{i+l=n} |a_i||a_l|` (and the `|K+i||K+l|`-weighted
/// analogue for `B`), floored away from zero.
fn entry_scales<T: Real>(x: &[T], y: &[T], k_min: i64) -> (Vec<T>, Vec<T>) {
    let mods: Vec<T> = x.iter().zip(y).map(|(a, b)| a.hypot(*b)).collect();
    let len = mods.len();
    let mut sa = vec![T::zero(); 2 * len - 1];
    let mut sb = vec![T::zero(); 2 * len - 1];
    for i in 0..len {
        for l in 0..len {
            let p = mods[i] * mods[l];
            let wi = T::from_int((k_min + i as i64).abs().max(1));
            let wl = T::from_int((k_min + l as i64).abs().max(1));
            sa[i + l] = sa[i + l] + p;
            sb[i + l] = sb[i + l] + wi * wl * p;
        }
    }
    let floor = |v: &mut Vec<T>| {
        let max = v.iter().fold(T::zero(), |m, s| m.max(*s));
        let tiny = max * T::epsilon() * T::epsilon();
        v.iter_mut()
            .for_each(|s| *s = s.max(tiny).max(T::min_positive_value()));
    };
    floor(&mut sa);
    floor(&mut sb);
    (sa, sb)
}

/// Largest entry mismatch of `(x, y)` against the data, each entry measured
/// against the magnitude of its own terms. Infinite for non-finite input.
pub(crate) fn backward_error<T: Real>(data: &AutocorrData<T>, x: &[T], y: &[T]) -> T {
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return T::infinity();
    }
    let (sa, sb) = entry_scales(x, y, data.k_min());
    let (a, b) = split_autocorr(x, y, data.k_min());
    let mut worst = T::zero();
    for ((u, v), s) in a.iter().zip(&data.a).zip(&sa) {
        worst = worst.max((*u - *v).abs() / *s);
    }
    if data.has_b() {
        for ((u, v), s) in b.iter().zip(&data.b).zip(&sb) {
            worst = worst.max((*u - *v).abs() / *s);
        }
    }
    worst
}

struct Problem<'a, T: Real> {
    data: &'a AutocorrData<T>,
    layout: Layout,
    scale_a: Vec<T>,
    scale_b: Vec<T>,
}

impl<T: Real> Problem<'_, T> {
    fn residuals(&self, theta: &[T]) -> Vec<T> {
        let (x, y) = self.layout.unpack(theta);
        let (a, b) = split_autocorr(&x, &y, self.data.k_min());
        let mut r: Vec<T> = a
            .iter()
            .zip(&self.data.a)
            .zip(&self.scale_a)
            .map(|((u, v), s)| (*u - *v) / *s)
            .collect();
        if self.data.has_b() {
            r.extend(
                b.iter()
                    .zip(&self.data.b)
                    .zip(&self.scale_b)
                    .map(|((u, v), s)| (*u - *v) / *s),
            );
        }
        r
    }

    fn cost(&self, theta: &[T]) -> T {
        self.residuals(theta)
            .iter()
            .fold(T::zero(), |s, r| s + *r * *r)
    }

    /// Jacobian of the weighted residuals with respect to `theta`.
    fn jacobian(&self, theta: &[T]) -> Matrix<T> {
        let (x, y) = self.layout.unpack(theta);
        let len = self.layout.len;
        let k_min = self.data.k_min();
        let entries = 2 * len - 1;
        let rows = if self.data.has_b() {
            2 * entries
        } else {
            entries
        };
        let mut jac = Matrix::zeros(rows, self.layout.count());
        let two = T::lit(2.0);
        for n in 0..entries {
            for j in 0..len.min(n + 1) {
                let l = n - j;
                if l >= len {
                    continue;
                }
                // d/dx_j Σ_{i+l=n} x_i x_l = 2 x_{n-j}; likewise for y.
                let w_b = T::from_int((k_min + j as i64) * (k_min + l as i64));
                jac[(n, j)] = two * x[l] / self.scale_a[n];
                if self.data.has_b() {
                    jac[(entries + n, j)] = two * w_b * x[l] / self.scale_b[n];
                }
                if j >= self.layout.free_im_from {
                    let col = len + j - self.layout.free_im_from;
                    jac[(n, col)] = two * y[l] / self.scale_a[n];
                    if self.data.has_b() {
                        jac[(entries + n, col)] = two * w_b * y[l] / self.scale_b[n];
                    }
                }
            }
        }
        jac
    }
}

/// Outcome of [`polish`].
pub(crate) struct Polished<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
}

/// Levenberg–Marquardt on the weighted residuals starting from `(x, y)`.
/// Imaginary parts below `free_im_from` are held at zero.
pub(crate) fn polish<T: Real>(
    data: &AutocorrData<T>,
    x: &[T],
    y: &[T],
    free_im_from: usize,
) -> Polished<T> {
    let layout = Layout {
        len: x.len(),
        free_im_from,
    };
    let (scale_a, scale_b) = entry_scales(x, y, data.k_min());
    let problem = Problem {
        data,
        layout,
        scale_a,
        scale_b,
    };
    let mut theta = problem.layout.pack(x, y);
    let mut cost = problem.cost(&theta);
    // Parameter scaling: each unknown measured relative to its coefficient.
    let mods: Vec<T> = x.iter().zip(y).map(|(a, b)| a.hypot(*b)).collect();
    let max_mod = mods.iter().fold(T::zero(), |m, v| m.max(*v));
    let pscale: Vec<T> = (0..problem.layout.count())
        .map(|c| {
            let idx = if c < problem.layout.len {
                c
            } else {
                problem.layout.free_im_from + c - problem.layout.len
            };
            mods[idx].max(max_mod * T::epsilon())
        })
        .collect();
    let mut mu = T::lit(1e-6);
    let stop = T::epsilon() * T::lit(4.0);
    let mut checkpoint = cost;
    for iter in 1..=MAX_ITERATIONS {
        if cost == T::zero() {
            break;
        }
        let jac = problem.jacobian(&theta);
        let r = problem.residuals(&theta);
        let (rows, cols) = (jac.rows(), jac.cols());
        let mut improved = false;
        for _ in 0..12 {
            let damp = mu.sqrt();
            let aug = Matrix::from_fn(rows + cols, cols, |i, j| {
                if i < rows {
                    jac[(i, j)] * pscale[j]
                } else if i - rows == j {
                    damp
                } else {
                    T::zero()
                }
            });
            let mut rhs: Vec<T> = r.iter().map(|v| -*v).collect();
            rhs.extend(std::iter::repeat_n(T::zero(), cols));
            let Ok(step) = HouseholderQr::new(&aug).and_then(|qr| qr.solve(&rhs)) else {
                mu = mu * T::lit(10.0);
                continue;
            };
            let trial: Vec<T> = theta
                .iter()
                .zip(&step)
                .zip(&pscale)
                .map(|((t, s), p)| *t + *s * *p)
                .collect();
            let trial_cost = problem.cost(&trial);
            if trial_cost.is_finite() && trial_cost < cost {
                let rel_step = step.iter().fold(T::zero(), |m, s| m.max(s.abs()));
                theta = trial;
                let gain = (cost - trial_cost) / cost;
                cost = trial_cost;
                mu = (mu / T::lit(3.0)).max(T::lit(1e-15));
                improved = rel_step > stop && gain > stop;
                break;
            }
            mu = mu * T::lit(4.0);
        }
        if !improved {
            break;
        }
        if iter % STALL_WINDOW == 0 {
            if cost > checkpoint / T::lit(2.0) {
                break;
            }
            checkpoint = cost;
        }
    }
    let (x, y) = problem.layout.unpack(&theta);
    Polished { x, y }
}

//! Closed-form steps of the coefficient recursion.
//!
//! Coefficients are addressed relative to the window start: `a_i = c̃_{K+i}`
//! with `x_i = Re a_i`, `y_i = Im a_i`, `K = K_-`. The data enter through
//!
//! ```text
//! Â_n = A_{2K+n}                 = Σ_{i+l=n} (x_i x_l + y_i y_l)
//! D_n = B_{2K+n} - K(K+n) A_{2K+n} = Σ_{i+l=n} i l (x_i x_l + y_i y_l)
//! ```
//!
//! `D_n` never involves `a_0`, which is what lets the real and imaginary
//! parts be separated order by order. Each general routine solves for one
//! unknown that enters its equation linearly (or as a square), with every
//! not-yet-known entry of `x`, `y` held at zero.

use crate::autocorr::AutocorrData;
use crate::scalar::{compensated_sum, Real};

/// Read-only view of `(A, B)` in window-relative indexing.
#[derive(Clone, Copy, Debug)]
pub struct Frame<'a, T: Real> {
    data: &'a AutocorrData<T>,
}

impl<'a, T: Real> Frame<'a, T> {
    pub fn new(data: &'a AutocorrData<T>) -> Self {
        Self { data }
    }

    /// `K_-`.
    pub fn k(&self) -> i64 {
        self.data.k_min()
    }

    /// `K_+ - K_-`.
    pub fn span(&self) -> usize {
        (self.data.a.len() - 1) / 2
    }

    /// `A_{2K+n}`.
    pub fn a(&self, n: usize) -> T {
        self.data.a_at(self.data.m_min + n as i64)
    }

    /// `B_{2K+n}`.
    pub fn b(&self, n: usize) -> T {
        self.data.b_at(self.data.m_min + n as i64)
    }

    /// `D_n = B_{2K+n} - K(K+n) A_{2K+n}`.
    pub fn d(&self, n: usize) -> T {
        let k = self.k();
        self.b(n) - T::from_int(k * (k + n as i64)) * self.a(n)
    }

    /// `|B_{2K+n}| + |K(K+n) A_{2K+n}|`, the rounding scale of [`Self::d`].
    pub fn d_scale(&self, n: usize) -> T {
        let k = self.k();
        self.b(n).abs() + (T::from_int(k * (k + n as i64)) * self.a(n)).abs()
    }
}

/// `(Σ_{i+l=n} w(i,l) (x_i x_l + y_i y_l), Σ |...|)`.
fn pair_sum<T: Real>(x: &[T], y: &[T], n: usize, w: impl Fn(usize, usize) -> T) -> (T, T) {
    let len = x.len();
    if n > 2 * (len - 1) {
        return (T::zero(), T::zero());
    }
    let lo = n.saturating_sub(len - 1);
    let mut scale = T::zero();
    let terms: Vec<T> = (lo..=n.min(len - 1))
        .map(|i| {
            let l = n - i;
            let t = w(i, l) * (x[i] * x[l] + y[i] * y[l]);
            scale = scale + t.abs();
            t
        })
        .collect();
    (compensated_sum(terms), scale)
}

/// `Σ_{i+l=n} (x_i x_l + y_i y_l)` with its absolute scale.
pub fn partial_a<T: Real>(x: &[T], y: &[T], n: usize) -> (T, T) {
    pair_sum(x, y, n, |_, _| T::one())
}

/// `Σ_{i+l=n} i l (x_i x_l + y_i y_l)` with its absolute scale.
pub fn partial_d<T: Real>(x: &[T], y: &[T], n: usize) -> (T, T) {
    pair_sum(x, y, n, |i, l| T::from_int((i * l) as i64))
}

/// `c̃_{K_-} = √A_{2K_-}`, real positive by choice of global phase.
pub fn leading<T: Real>(f: &Frame<T>) -> T {
    f.a(0).sqrt()
}

/// `Re c̃_{K_-+1} = A_{2K_-+1} / (2√A_{2K_-})`.
pub fn re_first<T: Real>(f: &Frame<T>) -> T {
    f.a(1) / (T::lit(2.0) * f.a(0).sqrt())
}

/// `Re c̃_{K_-+2} = ((K_-+1)² A_{2K_-+2} - B_{2K_-+2}) / (2√A_{2K_-})`.
pub fn re_second<T: Real>(f: &Frame<T>) -> T {
    let k1 = T::from_int(f.k() + 1);
    (k1 * k1 * f.a(2) - f.b(2)) / (T::lit(2.0) * f.a(0).sqrt())
}

/// `(Im c̃_{K_-+1})² = B_{2K_-+2} - K_-(K_-+2) A_{2K_-+2} - A_{2K_-+1}² / (4 A_{2K_-})`.
pub fn im_first_sq<T: Real>(f: &Frame<T>) -> T {
    f.d(2) - f.a(1) * f.a(1) / (T::lit(4.0) * f.a(0))
}

/// `Re c̃_{K_-+3} = ((K_-+1)(K_-+2) A_{2K_-+3} - B_{2K_-+3}) / (4√A_{2K_-})`.
pub fn re_third<T: Real>(f: &Frame<T>) -> T {
    let k = f.k();
    let w = T::from_int((k + 1) * (k + 2));
    (w * f.a(3) - f.b(3)) / (T::lit(4.0) * f.a(0).sqrt())
}

/// `Re(c̃_{K_-+1} conj c̃_{K_-+2}) = (B_{2K_-+3} - K_-(K_-+3) A_{2K_-+3}) / 4`.
pub fn cross_first_second<T: Real>(f: &Frame<T>) -> T {
    f.d(3) / T::lit(4.0)
}

/// `Im c̃_j = (Re(c̃_j conj c̃_pivot) - Re c̃_pivot Re c̃_j) / Im c̃_pivot`.
pub fn im_from_cross<T: Real>(cross: T, re_pivot: T, im_pivot: T, re_j: T) -> T {
    (cross - re_pivot * re_j) / im_pivot
}

/// `Re(c̃_k conj c̃_{K_-+1})` for absolute `k`, from the pair
/// `(A_{k+K_-+1}, B_{k+K_-+1})` after removing the contributions
/// `C_A = Σ_{j=K_-+2}^{k-1} c̃_{k+K_-+1-j} conj c̃_j` and the `j(k+K_-+1-j)`
/// weighted `C_B` of already known coefficients:
///
/// `(B - K_-(k+1) A + K_-(k+1) C_A - C_B) / (2(k - K_-))`.
///
/// `x`, `y` must hold `a_1 ..= a_{k-K_--1}`.
pub fn cross_with_first<T: Real>(f: &Frame<T>, x: &[T], y: &[T], k: i64) -> T {
    let kk = f.k();
    let j = (k - kk) as usize;
    let m = j + 1;
    let (mut ca, mut cb) = (Vec::new(), Vec::new());
    for i in 2..j {
        let l = m - i;
        let p = x[i] * x[l] + y[i] * y[l];
        ca.push(p);
        cb.push(T::from_int((kk + i as i64) * (kk + l as i64)) * p);
    }
    let (ca, cb) = (compensated_sum(ca), compensated_sum(cb));
    let w = T::from_int(kk * (k + 1));
    (f.b(m) - w * f.a(m) + w * ca - cb) / (T::lit(2.0) * T::from_int(k - kk))
}

/// With `c̃_{K_-+1}` real: `(Im c̃_{K_-+2})² = (D_4 - 6 c̃_{K_-+1} Re c̃_{K_-+3}) / 4 - (Re c̃_{K_-+2})²`.
pub fn pivot2_im_sq<T: Real>(f: &Frame<T>, re1: T, re2: T, re3: T) -> T {
    (f.d(4) - T::lit(6.0) * re1 * re3) / T::lit(4.0) - re2 * re2
}

/// `x_n = (Â_n - Σ_{i+l=n, 0<i<n} ...) / (2 x_0)`, with `x_n` held at zero.
pub fn solve_re<T: Real>(f: &Frame<T>, x: &[T], y: &[T], n: usize) -> T {
    let (s, _) = partial_a(x, y, n);
    (f.a(n) - s) / (T::lit(2.0) * x[0])
}

/// `(y_p², scale)` from `D_{2p}`, with `y_p` held at zero.
pub fn pivot_im_sq<T: Real>(f: &Frame<T>, x: &[T], y: &[T], p: usize) -> (T, T) {
    let n = 2 * p;
    let (s, scale) = partial_d(x, y, n);
    let pp = T::from_int((p * p) as i64);
    ((f.d(n) - s) / pp, (f.d_scale(n) + scale) / pp)
}

/// `y_k` from `D_{k+p}`, with `y_k` held at zero and `y_p` the pivot.
pub fn im_from_d<T: Real>(f: &Frame<T>, x: &[T], y: &[T], k: usize, p: usize) -> T {
    let (s, _) = partial_d(x, y, k + p);
    (f.d(k + p) - s) / (T::from_int((2 * k * p) as i64) * y[p])
}

/// `y_k` from `Â_{k+p}` when `k + p` exceeds the span (no `x_{k+p}` term),
/// with `y_k` held at zero.
pub fn im_from_a<T: Real>(f: &Frame<T>, x: &[T], y: &[T], k: usize, p: usize) -> T {
    let (s, _) = partial_a(x, y, k + p);
    (f.a(k + p) - s) / (T::lit(2.0) * y[p])
}

/// Variants that do not follow from expanding the autocorrelation sums.
/// Kept so the oracle can show they disagree with the data.
pub mod naive {
    use super::*;

    /// Squares `B_{2K_-+2}` and omits the `K_-(K_-+2) A` shift.
    pub fn im_first_sq<T: Real>(f: &Frame<T>) -> T {
        f.b(2) * f.b(2) - f.a(1) * f.a(1) / (T::lit(4.0) * f.a(0))
    }

    /// Divides the pivot-2 modulus by 8 instead of 4.
    pub fn pivot2_im_sq<T: Real>(f: &Frame<T>, re1: T, re2: T, re3: T) -> T {
        (f.d(4) - T::lit(6.0) * re1 * re3) / T::lit(8.0) - re2 * re2
    }

    /// Divides the cross term by `4√A_{K_-}` (single index) instead of 4.
    pub fn cross_first_second<T: Real>(f: &Frame<T>) -> T {
        let a_single = f.data.a_at(f.k());
        f.d(3) / (T::lit(4.0) * a_single.sqrt())
    }
}

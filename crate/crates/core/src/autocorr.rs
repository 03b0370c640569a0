//! Coefficient sequences of the squared moduli `|f|²` and `|d|²`.
//!
//! With weighted coefficients `c̃_k = c_k exp(-λ β² k²)`,
//!
//! ```text
//! |f(x)|² = exp(-2λx²) Σ_m A_m exp(2λβ m x),   A_m = Σ_{k+j=m} c̃_k conj(c̃_j)
//! |d(x)|² = exp(-2λx²) Σ_m B_m exp(2λβ m x),   B_m = Σ_{k+j=m} k j c̃_k conj(c̃_j)
//! ```
//!
//! for `m = 2K_- ..= 2K_+`. Both sequences are real.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{CprError, Result};
use crate::scalar::{compensated_sum, ComplexSum, Real};
use crate::signal::{GaussianSignal, HermiteSample};

/// Relative tolerance for negative rounding residue in `|f|²`.
pub const MODULUS_TOLERANCE: f64 = 1e-12;
/// Relative tolerance for negative rounding residue in the extracted `|d|²`.
pub const D_MODULUS_TOLERANCE: f64 = 1e-10;
/// Relative imaginary residue allowed in a Hermitian autocorrelation sum.
pub const IMAG_RESIDUE_TOLERANCE: f64 = 1e-12;

/// Autocorrelation sequences `A_m`, `B_m` for `m = m_min ..= m_min + len - 1`.
///
/// `B` is empty until it has been filled (forward computation or
/// [`crate::expsolve::recover_b`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct AutocorrData<T: Real> {
    pub m_min: i64,
    #[serde(rename = "A")]
    pub a: Vec<T>,
    #[serde(rename = "B")]
    pub b: Vec<T>,
    pub lambda: T,
    pub beta: T,
}

impl<T: Real> AutocorrData<T> {
    /// Forward computation of both sequences from a signal.
    pub fn from_signal(signal: &GaussianSignal<T>) -> Result<Self> {
        if signal.is_zero() {
            return Err(CprError::ZeroSignal);
        }
        Ok(Self {
            m_min: 2 * signal.k_min(),
            a: autocorr_a(signal)?,
            b: autocorr_b(signal)?,
            lambda: signal.lambda(),
            beta: signal.beta(),
        })
    }

    /// Checks shape and the positivity of the leading entry.
    pub fn validate(&self) -> Result<()> {
        if self.a.len() % 2 != 1 || self.m_min % 2 != 0 {
            return Err(CprError::DimensionMismatch(format!(
                "A must have odd length starting at an even index (m_min={}, len={})",
                self.m_min,
                self.a.len()
            )));
        }
        if !self.b.is_empty() && self.b.len() != self.a.len() {
            return Err(CprError::DimensionMismatch(format!(
                "A has {} entries but B has {}",
                self.a.len(),
                self.b.len()
            )));
        }
        if self.a.iter().chain(&self.b).any(|v| !v.is_finite()) {
            return Err(CprError::DimensionMismatch("non-finite entry".into()));
        }
        if !(self.a[0] > T::zero()) {
            return Err(CprError::InvalidLeadingCoefficient {
                value: self.a[0].as_f64(),
            });
        }
        Ok(())
    }

    pub fn k_min(&self) -> i64 {
        self.m_min / 2
    }

    pub fn k_max(&self) -> i64 {
        (self.m_min + self.a.len() as i64 - 1) / 2
    }

    pub fn m_max(&self) -> i64 {
        self.m_min + self.a.len() as i64 - 1
    }

    pub fn has_b(&self) -> bool {
        !self.b.is_empty()
    }

    /// `A_m`, zero outside the stored range.
    pub fn a_at(&self, m: i64) -> T {
        at(&self.a, m - self.m_min)
    }

    /// `B_m`, zero outside the stored range.
    pub fn b_at(&self, m: i64) -> T {
        at(&self.b, m - self.m_min)
    }

    /// `exp(-2λx²) Σ_m A_m exp(2λβ m x)`, i.e. `|f(x)|²`.
    pub fn modulus_sq(&self, x: T) -> Result<T> {
        let (value, scale) = self.exp_sum(&self.a, x, |_| T::one());
        clamp_residue(value, scale, T::tol(MODULUS_TOLERANCE))
    }

    /// `|d(x)|²` evaluated from the `B` sequence.
    pub fn d_modulus_sq(&self, x: T) -> Result<T> {
        let (value, scale) = self.exp_sum(&self.b, x, |_| T::one());
        clamp_residue(value, scale, T::tol(MODULUS_TOLERANCE))
    }

    /// Extracts `|d(γ)|²` from one Hermite sample using `A`:
    ///
    /// `β²|d|² = |f'|²/(4λ²) - γ²|f|² + βγ exp(-2λγ²) Σ_m m A_m exp(2λβmγ)`.
    pub fn d_mag_sq_from_sample(&self, sample: &HermiteSample<T>) -> Result<T> {
        self.d_mag_sq_from_sample_tol(sample, T::tol(D_MODULUS_TOLERANCE))
    }

    /// As [`Self::d_mag_sq_from_sample`] with an explicit relative clamp tolerance.
    pub fn d_mag_sq_from_sample_tol(&self, sample: &HermiteSample<T>, rel_tol: T) -> Result<T> {
        let g = sample.gamma;
        let four_l2 = T::lit(4.0) * self.lambda * self.lambda;
        let t1 = sample.mag_df * sample.mag_df / four_l2;
        let t2 = g * g * sample.mag_f * sample.mag_f;
        let (moment, moment_scale) = self.exp_sum(&self.a, g, |m| T::from_int(m));
        let t3 = self.beta * g * moment;
        let b2 = self.beta * self.beta;
        let value = compensated_sum([t1, -t2, t3]) / b2;
        let scale = (t1 + t2 + (self.beta * g).abs() * moment_scale) / b2;
        clamp_residue(value, scale, rel_tol)
    }

    /// Half-lattice coefficients `r_m = A_m exp(λβ² m² / 2)` with
    /// `|f(x)|² = Σ_m r_m exp(-2λ (x - β m/2)²)`.
    pub fn half_lattice(&self) -> Vec<T> {
        let lb2 = self.lambda * self.beta * self.beta;
        self.a
            .iter()
            .enumerate()
            .map(|(p, &a)| {
                let m = T::from_int(self.m_min + p as i64);
                a * (lb2 * m * m / T::lit(2.0)).exp()
            })
            .collect()
    }

    /// Returns `(Σ_m w(m) X_m exp(-2λx² + 2λβmx), Σ_m |w(m) X_m| exp(..))`.
    fn exp_sum(&self, xs: &[T], x: T, w: impl Fn(i64) -> T) -> (T, T) {
        let two_l = T::lit(2.0) * self.lambda;
        let mut scale = T::zero();
        let terms: Vec<T> = xs
            .iter()
            .enumerate()
            .map(|(p, &v)| {
                let m = self.m_min + p as i64;
                let e = (two_l * x * (self.beta * T::from_int(m) - x)).exp();
                let t = w(m) * v * e;
                scale = scale + t.abs();
                t
            })
            .collect();
        (compensated_sum(terms), scale)
    }
}

fn at<T: Real>(xs: &[T], p: i64) -> T {
    if p < 0 {
        return T::zero();
    }
    xs.get(p as usize).copied().unwrap_or_else(T::zero)
}

fn clamp_residue<T: Real>(value: T, scale: T, rel_tol: T) -> Result<T> {
    if value >= T::zero() {
        Ok(value)
    } else if value >= -rel_tol * scale {
        Ok(T::zero())
    } else {
        Err(CprError::NegativeModulus {
            value: value.as_f64(),
            scale: scale.as_f64(),
        })
    }
}

/// `c̃_k = c_k exp(-λ β² k²)` with absolute `k`.
pub fn tilde_coeffs<T: Real>(signal: &GaussianSignal<T>) -> Vec<Complex<T>> {
    let lb2 = signal.lambda() * signal.beta() * signal.beta();
    signal
        .indices()
        .zip(signal.coeffs())
        .map(|(k, c)| {
            let kk = T::from_int(k);
            *c * (-lb2 * kk * kk).exp()
        })
        .collect()
}

/// Inverse of [`tilde_coeffs`]: `c_k = c̃_k exp(λ β² k²)`.
pub fn untilde_coeffs<T: Real>(
    tilde: &[Complex<T>],
    k_min: i64,
    lambda: T,
    beta: T,
) -> Vec<Complex<T>> {
    let lb2 = lambda * beta * beta;
    tilde
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let kk = T::from_int(k_min + j as i64);
            *c * (lb2 * kk * kk).exp()
        })
        .collect()
}

/// `Σ_{k+j=m} w(k, j) c̃_k conj(c̃_j)` for every `m` in the doubled window,
/// checking that each sum is real.
fn hermitian_autocorr<T: Real>(
    tilde: &[Complex<T>],
    k_min: i64,
    weight: impl Fn(i64, i64) -> T,
) -> Result<Vec<T>> {
    let len = tilde.len();
    if len == 0 {
        return Ok(Vec::new());
    }
    let tol = T::tol(IMAG_RESIDUE_TOLERANCE);
    (0..2 * len - 1)
        .map(|n| {
            let mut acc = ComplexSum::new();
            let mut scale = T::zero();
            let lo = n.saturating_sub(len - 1);
            for i in lo..=n.min(len - 1) {
                let l = n - i;
                let w = weight(k_min + i as i64, k_min + l as i64);
                let t = tilde[i] * tilde[l].conj() * w;
                scale = scale + t.norm();
                acc.add(t);
            }
            let v = acc.value();
            if v.im.abs() > tol * scale {
                return Err(CprError::NonRealAutocorrelation {
                    m: 2 * k_min + n as i64,
                    residue: (v.im.abs() / scale).as_f64(),
                });
            }
            Ok(v.re)
        })
        .collect()
}

/// `A_m`, `m = 2K_- ..= 2K_+`.
pub fn autocorr_a<T: Real>(signal: &GaussianSignal<T>) -> Result<Vec<T>> {
    hermitian_autocorr(&tilde_coeffs(signal), signal.k_min(), |_, _| T::one())
}

/// `B_m` from the weighted Hermitian sum, `m = 2K_- ..= 2K_+`.
///
/// In debug builds this is cross-checked against `A` of the companion
/// signal `d`, which must agree on the shared index range.
pub fn autocorr_b<T: Real>(signal: &GaussianSignal<T>) -> Result<Vec<T>> {
    let b = hermitian_autocorr(&tilde_coeffs(signal), signal.k_min(), |k, j| {
        T::from_int(k) * T::from_int(j)
    })?;
    #[cfg(debug_assertions)]
    {
        let dual = autocorr_b_via_omega(signal)?;
        let scale = crate::scalar::max_abs(&b).max(T::min_positive_value());
        let gap = b
            .iter()
            .zip(&dual)
            .fold(T::zero(), |m, (x, y)| m.max((*x - *y).abs()));
        debug_assert!(
            gap <= T::tol(1e-10) * scale,
            "B mismatch between weighted sum and A of omega: {gap}"
        );
    }
    Ok(b)
}

/// `B_m` computed as `A` of the companion signal, aligned on the window of
/// `signal` (missing entries are zero).
pub fn autocorr_b_via_omega<T: Real>(signal: &GaussianSignal<T>) -> Result<Vec<T>> {
    let len = 2 * signal.coeffs().len() - 1;
    let mut out = vec![T::zero(); len];
    let d = signal.omega();
    if d.is_zero() {
        return Ok(out);
    }
    let ad = autocorr_a(&d)?;
    let offset = (2 * (d.k_min() - signal.k_min())) as usize;
    for (p, v) in ad.into_iter().enumerate() {
        out[offset + p] = v;
    }
    Ok(out)
}

/// Half-lattice expansion `r_m` of `|f|²`.
pub fn half_lattice_r<T: Real>(signal: &GaussianSignal<T>) -> Result<Vec<T>> {
    Ok(AutocorrData::from_signal(signal)?.half_lattice())
}

/// Real-arithmetic autocorrelations of a tilde sequence split into real
/// parts `x` and imaginary parts `y`:
/// `A_n = Σ_{i+l=n} (x_i x_l + y_i y_l)`,
/// `B_n = Σ_{i+l=n} (K+i)(K+l)(x_i x_l + y_i y_l)`.
pub(crate) fn split_autocorr<T: Real>(x: &[T], y: &[T], k_min: i64) -> (Vec<T>, Vec<T>) {
    let len = x.len();
    let mut a = Vec::with_capacity(2 * len - 1);
    let mut b = Vec::with_capacity(2 * len - 1);
    for n in 0..2 * len - 1 {
        let lo = n.saturating_sub(len - 1);
        let mut sa = Vec::new();
        let mut sb = Vec::new();
        for i in lo..=n.min(len - 1) {
            let l = n - i;
            let p = x[i] * x[l] + y[i] * y[l];
            sa.push(p);
            sb.push(T::from_int(k_min + i as i64) * T::from_int(k_min + l as i64) * p);
        }
        a.push(compensated_sum(sa));
        b.push(compensated_sum(sb));
    }
    (a, b)
}

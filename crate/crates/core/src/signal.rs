//! Finite-duration signals in the Gaussian shift-invariant space and their
//! phaseless Hermite samples.
//!
//! A signal is `f(x) = Σ_k c_k exp(-λ (x - β k)²)` over an integer window
//! `k_min ..= k_max`. Lattice indices are absolute throughout: the companion
//! signal `d` carries coefficients `k c_k`, so translating a signal changes `d`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{CprError, Result};
use crate::scalar::{ComplexSum, Real};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "SignalRepr<T>",
    into = "SignalRepr<T>",
    bound(
        serialize = "T: Real + Serialize",
        deserialize = "T: Real + Deserialize<'de>"
    )
)]
pub struct GaussianSignal<T: Real> {
    lambda: T,
    beta: T,
    k_min: i64,
    coeffs: Vec<Complex<T>>,
}

#[derive(Clone, Serialize, Deserialize)]
struct SignalRepr<T> {
    lambda: T,
    beta: T,
    k_min: i64,
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> TryFrom<SignalRepr<T>> for GaussianSignal<T> {
    type Error = CprError;

    fn try_from(r: SignalRepr<T>) -> Result<Self> {
        GaussianSignal::new(r.lambda, r.beta, r.k_min, r.coeffs)
    }
}

impl<T: Real> From<GaussianSignal<T>> for SignalRepr<T> {
    fn from(s: GaussianSignal<T>) -> Self {
        SignalRepr {
            lambda: s.lambda,
            beta: s.beta,
            k_min: s.k_min,
            coeffs: s.coeffs,
        }
    }
}

fn check_params<T: Real>(lambda: T, beta: T) -> Result<()> {
    if !(lambda.is_finite() && lambda > T::zero()) {
        return Err(CprError::InvalidSignal(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if !(beta.is_finite() && beta > T::zero()) {
        return Err(CprError::InvalidSignal(format!(
            "beta must be positive, got {beta}"
        )));
    }
    Ok(())
}

impl<T: Real> GaussianSignal<T> {
    /// Builds a signal whose coefficient `j` sits at lattice index `k_min + j`.
    ///
    /// The first and last coefficients must be nonzero so that the support
    /// window is exactly `k_min ..= k_min + coeffs.len() - 1`.
    pub fn new(lambda: T, beta: T, k_min: i64, coeffs: Vec<Complex<T>>) -> Result<Self> {
        check_params(lambda, beta)?;
        let (first, last) = match (coeffs.first(), coeffs.last()) {
            (Some(f), Some(l)) => (*f, *l),
            _ => {
                return Err(CprError::InvalidSignal(
                    "coefficient sequence is empty".into(),
                ))
            }
        };
        if coeffs
            .iter()
            .any(|c| !(c.re.is_finite() && c.im.is_finite()))
        {
            return Err(CprError::InvalidSignal("non-finite coefficient".into()));
        }
        if first == Complex::new(T::zero(), T::zero()) || last == Complex::new(T::zero(), T::zero())
        {
            return Err(CprError::InvalidSignal(
                "leading and trailing coefficients must be nonzero".into(),
            ));
        }
        Ok(Self {
            lambda,
            beta,
            k_min,
            coeffs,
        })
    }

    /// Builds a signal from real coefficients.
    pub fn from_real(lambda: T, beta: T, k_min: i64, coeffs: &[T]) -> Result<Self> {
        Self::new(
            lambda,
            beta,
            k_min,
            coeffs.iter().map(|&x| Complex::new(x, T::zero())).collect(),
        )
    }

    /// Strips zero coefficients at either end. Returns the zero signal when
    /// nothing remains.
    pub fn trimmed(lambda: T, beta: T, k_min: i64, coeffs: Vec<Complex<T>>) -> Result<Self> {
        check_params(lambda, beta)?;
        let nz = |c: &Complex<T>| c.re != T::zero() || c.im != T::zero();
        let Some(lo) = coeffs.iter().position(nz) else {
            return Ok(Self::zero(lambda, beta));
        };
        let hi = coeffs.iter().rposition(nz).unwrap_or(lo);
        Self::new(lambda, beta, k_min + lo as i64, coeffs[lo..=hi].to_vec())
    }

    /// The zero signal (empty support). Only produced by [`Self::omega`];
    /// every constructor taking coefficients rejects it.
    pub fn zero(lambda: T, beta: T) -> Self {
        Self {
            lambda,
            beta,
            k_min: 0,
            coeffs: Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    /// `K_-`, the lowest lattice index carrying a nonzero coefficient.
    pub fn k_min(&self) -> i64 {
        self.k_min
    }

    /// `K_+`, the highest lattice index carrying a nonzero coefficient.
    pub fn k_max(&self) -> i64 {
        self.k_min + self.coeffs.len() as i64 - 1
    }

    /// Width `K_+ - K_-` of the support window.
    pub fn span(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    /// Coefficient at absolute lattice index `k` (zero outside the window).
    pub fn coeff(&self, k: i64) -> Complex<T> {
        let j = k - self.k_min;
        if j < 0 {
            return Complex::new(T::zero(), T::zero());
        }
        self.coeffs
            .get(j as usize)
            .copied()
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.coeffs.len()).map(move |j| self.k_min + j as i64)
    }

    /// `Σ_k c_k exp(-λ (x - β k)²)`, accumulated in index order.
    pub fn evaluate(&self, x: T) -> Complex<T> {
        let mut acc = ComplexSum::new();
        for (k, c) in self.indices().zip(&self.coeffs) {
            let t = x - self.beta * T::from_int(k);
            acc.add(*c * (-self.lambda * t * t).exp());
        }
        acc.value()
    }

    /// `f'(x) = 2λ Σ_k (β k - x) c_k exp(-λ (x - β k)²)`.
    pub fn evaluate_derivative(&self, x: T) -> Complex<T> {
        let mut acc = ComplexSum::new();
        for (k, c) in self.indices().zip(&self.coeffs) {
            let t = self.beta * T::from_int(k) - x;
            acc.add(*c * (t * (-self.lambda * t * t).exp()));
        }
        acc.value() * (T::lit(2.0) * self.lambda)
    }

    /// The companion signal `d` with coefficients `k c_k` (absolute `k`).
    ///
    /// Zero coefficients created at the window edges are trimmed; a single
    /// coefficient at `k = 0` yields the zero signal.
    pub fn omega(&self) -> Self {
        let d = self
            .indices()
            .zip(&self.coeffs)
            .map(|(k, c)| *c * T::from_int(k))
            .collect();
        Self::trimmed(self.lambda, self.beta, self.k_min, d)
            .expect("omega of a valid signal is valid")
    }

    /// Rescales to unit lattice step: `β' = 1`, `λ' = β² λ`, same coefficients.
    /// The result evaluated at `u` equals the input evaluated at `β u`.
    pub fn normalize_step(&self) -> Self {
        Self {
            lambda: self.lambda * self.beta * self.beta,
            beta: T::one(),
            k_min: self.k_min,
            coeffs: self.coeffs.clone(),
        }
    }

    /// Multiplies every coefficient by `z`.
    pub fn scaled(&self, z: Complex<T>) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * z).collect(),
            ..self.clone()
        }
    }

    /// Coefficient-wise complex conjugate (the signal `x ↦ conj f(x)`).
    pub fn conjugated(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c.conj()).collect(),
            ..self.clone()
        }
    }

    /// Translates the coefficient window: index `k` moves to `k + shift`.
    pub fn shifted(&self, shift: i64) -> Self {
        Self {
            k_min: self.k_min + shift,
            ..self.clone()
        }
    }

    /// Phaseless Hermite samples `(|f(γ)|, |f'(γ)|)` at the given points.
    pub fn hermite_samples(&self, gammas: &[T]) -> Result<SampleSet<T>> {
        let points = gammas
            .iter()
            .map(|&gamma| HermiteSample {
                gamma,
                mag_f: self.evaluate(gamma).norm(),
                mag_df: self.evaluate_derivative(gamma).norm(),
            })
            .collect();
        SampleSet::new(points)
    }
}

/// `2 (k_max - k_min) + 1` equispaced points covering
/// `[β k_min - β/2, β k_max + β/2]`, one at the centre of each of as many
/// equal cells.
pub fn default_sampling_grid<T: Real>(k_min: i64, k_max: i64, beta: T) -> Vec<T> {
    assert!(k_min <= k_max, "k_min must not exceed k_max");
    sampling_grid(k_min, k_max, beta, 2 * (k_max - k_min) as usize + 1)
}

/// `count` cell-centred points over the same interval as
/// [`default_sampling_grid`]; used for oversampled measurements.
pub fn sampling_grid<T: Real>(k_min: i64, k_max: i64, beta: T, count: usize) -> Vec<T> {
    assert!(k_min <= k_max, "k_min must not exceed k_max");
    assert!(count > 0, "at least one point");
    let n = k_max - k_min;
    let half = T::lit(0.5);
    let lo = beta * (T::from_int(k_min) - half);
    let step = beta * T::from_int(n + 1) / T::from_int(count as i64);
    (0..count)
        .map(|i| lo + step * (T::from_int(i as i64) + half))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermiteSample<T> {
    pub gamma: T,
    pub mag_f: T,
    pub mag_df: T,
}

/// Sampling points with the magnitudes `|f(γ)|`, `|f'(γ)|` observed there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "SampleSetRepr<T>",
    into = "SampleSetRepr<T>",
    bound(
        serialize = "T: Real + Serialize",
        deserialize = "T: Real + Deserialize<'de>"
    )
)]
pub struct SampleSet<T: Real> {
    points: Vec<HermiteSample<T>>,
}

#[derive(Clone, Serialize, Deserialize)]
struct SampleSetRepr<T> {
    points: Vec<HermiteSample<T>>,
}

impl<T: Real> TryFrom<SampleSetRepr<T>> for SampleSet<T> {
    type Error = CprError;

    fn try_from(r: SampleSetRepr<T>) -> Result<Self> {
        SampleSet::new(r.points)
    }
}

impl<T: Real> From<SampleSet<T>> for SampleSetRepr<T> {
    fn from(s: SampleSet<T>) -> Self {
        SampleSetRepr { points: s.points }
    }
}

impl<T: Real> SampleSet<T> {
    pub fn new(points: Vec<HermiteSample<T>>) -> Result<Self> {
        for p in &points {
            if !p.gamma.is_finite() {
                return Err(CprError::InvalidSamples("non-finite sample point".into()));
            }
            let ok = |v: T| v.is_finite() && v >= T::zero();
            if !ok(p.mag_f) || !ok(p.mag_df) {
                return Err(CprError::InvalidSamples(format!(
                    "magnitudes at {} must be finite and non-negative",
                    p.gamma
                )));
            }
        }
        let mut gammas: Vec<T> = points.iter().map(|p| p.gamma).collect();
        gammas.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        if gammas.windows(2).any(|w| w[0] == w[1]) {
            return Err(CprError::DuplicatePoints);
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[HermiteSample<T>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn gammas(&self) -> Vec<T> {
        self.points.iter().map(|p| p.gamma).collect()
    }

    /// Number of sample points inside `[center - radius, center + radius]`.
    ///
    /// Finite sets have zero asymptotic density, so this windowed count is
    /// the only density diagnostic reported.
    pub fn count_in_window(&self, center: T, radius: T) -> usize {
        self.points
            .iter()
            .filter(|p| (p.gamma - center).abs() <= radius)
            .count()
    }

    /// Same magnitudes observed at points translated by `offset`.
    pub fn translated(&self, offset: T) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|p| HermiteSample {
                    gamma: p.gamma + offset,
                    ..*p
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn unit() -> GaussianSignal<f64> {
        GaussianSignal::new(1.0, 1.0, 0, vec![c(1.0, 0.0)]).unwrap()
    }

    #[test]
    fn evaluate_single_gaussian() {
        let s = unit();
        assert_eq!(s.evaluate(0.0), c(1.0, 0.0));
        assert_relative_eq!(
            s.evaluate(1.0).re,
            0.367_879_441_171_442_3,
            max_relative = 1e-15
        );
    }

    #[test]
    fn evaluate_two_terms_at_midpoint() {
        let s = GaussianSignal::new(1.0, 1.0, 0, vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_relative_eq!(
            s.evaluate(0.5).re,
            2.0 * (-0.25f64).exp(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn derivative_closed_forms() {
        let s = unit();
        assert_eq!(s.evaluate_derivative(0.0).norm(), 0.0);
        assert_relative_eq!(
            s.evaluate_derivative(1.0).re,
            -0.735_758_882_342_884_6,
            max_relative = 1e-15
        );
    }

    #[test]
    fn derivative_matches_central_difference() {
        let s = GaussianSignal::new(
            0.8,
            1.2,
            -1,
            vec![c(0.3, -0.7), c(1.0, 0.2), c(-0.4, 0.5), c(0.6, 0.6)],
        )
        .unwrap();
        let (x, h) = (0.3, 1e-5);
        let fd = (s.evaluate(x + h) - s.evaluate(x - h)) / (2.0 * h);
        let d = s.evaluate_derivative(x);
        assert!((fd - d).norm() <= 1e-7 * d.norm());
    }

    #[test]
    fn omega_trims_and_weights() {
        let s = GaussianSignal::new(1.0, 1.0, 0, vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let d = s.omega();
        assert_eq!(d.k_min(), 1);
        assert_eq!(d.coeffs(), &[c(0.0, 1.0)]);

        let s = GaussianSignal::new(1.0, 1.0, 2, vec![c(5.0, 0.0)]).unwrap();
        assert_eq!(s.omega().coeffs(), &[c(10.0, 0.0)]);

        let s = GaussianSignal::from_real(1.0, 1.0, -1, &[1.0, 1.0, 1.0]).unwrap();
        let d = s.omega();
        assert_eq!(d.k_min(), -1);
        assert_eq!(d.coeffs(), &[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);

        assert!(unit().omega().is_zero());
    }

    #[test]
    fn normalize_step_rescales() {
        let s = GaussianSignal::from_real(0.25, 2.0, 0, &[1.0]).unwrap();
        let n = s.normalize_step();
        assert_eq!((n.beta(), n.lambda()), (1.0, 1.0));
        assert_eq!(unit().normalize_step(), unit());

        let s = GaussianSignal::new(0.7, 1.3, -2, vec![c(0.5, 0.1), c(-0.2, 0.9), c(0.4, -0.3)])
            .unwrap();
        let n = s.normalize_step();
        let (a, b) = (n.evaluate(0.7), s.evaluate(1.3 * 0.7));
        assert!((a - b).norm() <= 1e-12 * b.norm());
    }

    #[test]
    fn hermite_samples_of_unit() {
        let set = unit().hermite_samples(&[0.0]).unwrap();
        assert_eq!(
            set.points(),
            &[HermiteSample {
                gamma: 0.0,
                mag_f: 1.0,
                mag_df: 0.0
            }]
        );
        assert_eq!(
            unit().hermite_samples(&[0.0, 1.0, 0.0]),
            Err(CprError::DuplicatePoints)
        );
    }

    #[test]
    fn default_grid_shapes() {
        assert_eq!(default_sampling_grid(0, 0, 1.0), vec![0.0]);
        let g = default_sampling_grid(0, 2, 1.0);
        assert_eq!(g.len(), 5);
        assert!(g[0] > -0.5 && g[4] < 2.5);
        assert_relative_eq!(g[2], 1.0, epsilon = 1e-15);
        let g = default_sampling_grid(-1, 1, 2.0);
        assert_eq!(g.len(), 5);
        assert!(g[0] > -3.0 && g[4] < 3.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(GaussianSignal::<f64>::new(1.0, 1.0, 0, vec![]).is_err());
        assert!(GaussianSignal::new(0.0, 1.0, 0, vec![c(1.0, 0.0)]).is_err());
        assert!(GaussianSignal::new(1.0, -1.0, 0, vec![c(1.0, 0.0)]).is_err());
        assert!(GaussianSignal::new(1.0, 1.0, 0, vec![c(1.0, 0.0), c(0.0, 0.0)]).is_err());
        assert!(GaussianSignal::new(1.0, 1.0, 0, vec![c(f64::NAN, 0.0)]).is_err());
    }

    #[test]
    fn single_precision_evaluation() {
        let s = GaussianSignal::<f32>::from_real(1.0, 1.0, 0, &[1.0, 1.0]).unwrap();
        assert!((s.evaluate(0.5).re - 1.557_601_6).abs() < 1e-6);
    }

    #[test]
    fn window_count() {
        let set = unit()
            .hermite_samples(&default_sampling_grid(0, 3, 1.0))
            .unwrap();
        assert_eq!(set.count_in_window(1.5, 2.0), 7);
        assert_eq!(set.count_in_window(0.0, 0.5), 2);
    }
}

//! Recovery of the coefficients from `(A, B)` and the full sample-to-signal
//! pipeline.
//!
//! The recursion fixes `c̃_{K_-} = √A_{2K_-} > 0` and then walks up the
//! window. Real parts come from `A` alone. The first index `K_- + p` whose
//! coefficient is not real (the pivot) is located order by order from
//! `D_{2p}`; its imaginary part is taken positive, which selects one member
//! of the conjugate pair. Every later imaginary part follows linearly from
//! `D_{k+p}`, or from `A_{k+p}` once `k + p` runs past the window. `p = 1` is
//! the generic case; larger `p` happens when leading coefficients are real.

pub mod formulas;
mod refine;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::autocorr::{split_autocorr, untilde_coeffs, AutocorrData, D_MODULUS_TOLERANCE};
use crate::equiv::canonicalize;
use crate::error::{CprError, Result};
use crate::expsolve::{recover_a, recover_b_tol};
use crate::scalar::{max_abs, Real};
use crate::signal::{GaussianSignal, SampleSet};

use formulas::Frame;

/// Default branch threshold: an imaginary part counts as nonzero above
/// `tol_imag · √A_{2K_-}`.
pub const DEFAULT_TOL_IMAG: f64 = 1e-8;
/// Residual (relative to `||A||∞`) above which the data are rejected.
pub const INCONSISTENT_RESIDUAL: f64 = 1e-3;
/// Residual above which the fallback polish is triggered.
pub const REFINE_RESIDUAL: f64 = 1e-4;
/// Negative square-root arguments within this fraction of their scale are
/// treated as rounding and clamped to zero.
pub const DISCRIMINANT_TOLERANCE: f64 = 1e-10;
/// A squared imaginary part at or below this fraction of its scale is
/// rounding, whatever `tol_imag` says: `√(ε · scale)` alone is about `1.5e-8`.
pub const PIVOT_ROUNDING_FLOOR: f64 = 1e-13;

/// When to run the weighted least-squares polish after the recursion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Refinement {
    /// Plain recursion.
    Off,
    /// Only when the data residual exceeds [`REFINE_RESIDUAL`].
    Fallback,
    /// Always; the polished solution is kept when it fits better.
    Always,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoveryOptions<T> {
    /// Relative threshold deciding whether an imaginary part is zero.
    pub tol_imag: T,
    /// Squared imaginary parts at or below this fraction of their rounding
    /// scale never start a pivot.
    pub pivot_floor: T,
    pub refinement: Refinement,
    /// Relative clamp tolerance when extracting `|d(γ)|²` from samples.
    pub d_tolerance: T,
}

impl<T: Real> Default for RecoveryOptions<T> {
    fn default() -> Self {
        Self {
            tol_imag: T::tol(DEFAULT_TOL_IMAG),
            pivot_floor: T::tol(PIVOT_ROUNDING_FLOOR),
            refinement: Refinement::Always,
            d_tolerance: T::tol(D_MODULUS_TOLERANCE),
        }
    }
}

impl<T: Real> RecoveryOptions<T> {
    pub fn with_tol_imag(mut self, tol_imag: T) -> Self {
        self.tol_imag = tol_imag;
        self
    }

    pub fn with_pivot_floor(mut self, pivot_floor: T) -> Self {
        self.pivot_floor = pivot_floor;
        self
    }

    pub fn with_refinement(mut self, refinement: Refinement) -> Self {
        self.refinement = refinement;
        self
    }
}

/// One determined quantity in the recursion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct StepRecord<T: Real> {
    /// Absolute lattice index of the coefficient the step determined.
    pub k: i64,
    pub formula: String,
    /// Mismatch of the final solution at the data entry the step used,
    /// relative to `||A||∞`.
    #[serde(deserialize_with = "crate::json::nan_if_null")]
    pub residual: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct RecoveryResult<T: Real> {
    /// Canonical representative: leading coefficient real positive, first
    /// non-real coefficient with positive imaginary part.
    pub signal: GaussianSignal<T>,
    /// Absolute index of the first non-real coefficient, if any.
    pub pivot_index: Option<i64>,
    #[serde(deserialize_with = "crate::json::nan_if_null")]
    pub max_residual: T,
    #[serde(rename = "condition_A", deserialize_with = "crate::json::nan_if_null")]
    pub condition_a: T,
    #[serde(rename = "condition_B", deserialize_with = "crate::json::nan_if_null")]
    pub condition_b: T,
    pub branch_trace: Vec<StepRecord<T>>,
}

/// Which data entry a recursion step consumed.
#[derive(Clone, Copy)]
enum Source {
    A(usize),
    B(usize),
}

struct Recursion<'a, T: Real> {
    frame: Frame<'a, T>,
    x: Vec<T>,
    y: Vec<T>,
    known_re: usize,
    trace: Vec<(usize, &'static str, Source)>,
}

impl<'a, T: Real> Recursion<'a, T> {
    fn ensure_re(&mut self, upto: usize) {
        let upto = upto.min(self.x.len() - 1);
        while self.known_re < upto {
            let n = self.known_re + 1;
            self.x[n] = formulas::solve_re(&self.frame, &self.x, &self.y, n);
            self.trace.push((n, "re_from_a", Source::A(n)));
            self.known_re = n;
        }
    }
}

/// How the recursion picks the first non-real coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Branch {
    /// First discriminant above the thresholds.
    Detect,
    /// Imaginary parts below `p` are zero; `p` is the pivot.
    At(usize),
    /// Every imaginary part is zero.
    Real,
}

/// Relative solution `(x, y)`, the pivot and the step trace.
type Recursed<T> = (
    Vec<T>,
    Vec<T>,
    Option<usize>,
    Vec<(usize, &'static str, Source)>,
);

/// Runs the recursion on `data` along `branch`.
fn recurse<T: Real>(
    data: &AutocorrData<T>,
    options: &RecoveryOptions<T>,
    branch: Branch,
) -> Result<Recursed<T>> {
    let frame = Frame::new(data);
    let span = frame.span();
    let a0 = frame.a(0);
    if !(a0 > T::zero()) {
        return Err(CprError::InvalidLeadingCoefficient { value: a0.as_f64() });
    }
    let mut rec = Recursion {
        frame,
        x: vec![T::zero(); span + 1],
        y: vec![T::zero(); span + 1],
        known_re: 0,
        trace: vec![(0, "leading_modulus", Source::A(0))],
    };
    rec.x[0] = formulas::leading(&frame);
    let threshold = options.tol_imag * rec.x[0];
    let disc_tol = T::tol(DISCRIMINANT_TOLERANCE);
    let negative = |p: usize, sq: T, scale: T| CprError::NegativeDiscriminant {
        k: data.k_min() + p as i64,
        value: sq.as_f64(),
        scale: scale.as_f64(),
    };

    let mut pivot = None;
    for p in 1..=span {
        rec.ensure_re(2 * p - 1);
        let take = match branch {
            Branch::Real => false,
            Branch::At(q) if p < q => false,
            Branch::At(_) => {
                let (sq, scale) = formulas::pivot_im_sq(&frame, &rec.x, &rec.y, p);
                if !(sq > T::zero()) {
                    return Err(negative(p, sq, scale));
                }
                rec.y[p] = sq.sqrt();
                true
            }
            Branch::Detect => {
                let (sq, scale) = formulas::pivot_im_sq(&frame, &rec.x, &rec.y, p);
                if sq < -disc_tol * scale {
                    return Err(negative(p, sq, scale));
                }
                let im = sq.max(T::zero()).sqrt();
                let take = im > threshold && sq > options.pivot_floor * scale;
                if take {
                    rec.y[p] = im;
                }
                take
            }
        };
        if take {
            rec.trace.push((p, "pivot_im_from_b", Source::B(2 * p)));
            pivot = Some(p);
            break;
        }
        rec.trace.push((p, "real_at_order", Source::B(2 * p)));
    }

    if let Some(p) = pivot {
        for k in p + 1..=span {
            rec.ensure_re(k + p - 1);
            if k + p <= span {
                rec.y[k] = formulas::im_from_d(&frame, &rec.x, &rec.y, k, p);
                rec.trace.push((k, "im_cross_from_b", Source::B(k + p)));
            } else {
                rec.y[k] = formulas::im_from_a(&frame, &rec.x, &rec.y, k, p);
                rec.trace.push((k, "im_closure_from_a", Source::A(k + p)));
            }
        }
    }
    rec.ensure_re(span);
    Ok((rec.x, rec.y, pivot, rec.trace))
}

/// The same data seen from the top of the window: `a'_i = a_{N-i}`, in a
/// frame with `K = 0` so that `B' = D'`:
/// `Â'_n = Â_{2N-n}`, `D'_n = D_{2N-n} + N(n - N) Â_{2N-n}`.
fn reversed<T: Real>(data: &AutocorrData<T>) -> AutocorrData<T> {
    let frame = Frame::new(data);
    let span = frame.span();
    let top = 2 * span;
    let a = (0..=top).map(|n| frame.a(top - n)).collect();
    let b = (0..=top)
        .map(|n| {
            let w = T::from_int(span as i64 * (n as i64 - span as i64));
            frame.d(top - n) + w * frame.a(top - n)
        })
        .collect();
    AutocorrData {
        m_min: 0,
        a,
        b,
        lambda: data.lambda,
        beta: data.beta,
    }
}

/// Joins the forward solution (accurate near the start of the window) with
/// the reversed one (accurate near the end) at the middle index, after
/// matching phase and conjugation on the indices around it.
fn splice<T: Real>(fwd: &[Complex<T>], bwd: &[Complex<T>]) -> Vec<Complex<T>> {
    let len = fwd.len();
    let mid = (len - 1) / 2;
    let lo = mid.saturating_sub(1);
    let hi = (mid + 1).min(len - 1);
    let zero = Complex::new(T::zero(), T::zero());
    let fit = |conj: bool| {
        let g = |i: usize| if conj { bwd[i].conj() } else { bwd[i] };
        let w = |i: usize| T::one() / fwd[i].norm_sqr().max(T::min_positive_value());
        let inner = (lo..=hi).fold(zero, |s, i| s + fwd[i] * g(i).conj() * w(i));
        let z = if inner.norm() > T::zero() {
            inner / inner.norm()
        } else {
            Complex::new(T::one(), T::zero())
        };
        let err = (lo..=hi).fold(T::zero(), |s, i| s + (fwd[i] - z * g(i)).norm_sqr() * w(i));
        (err, z)
    };
    let (e_id, z_id) = fit(false);
    let (e_cj, z_cj) = fit(true);
    let (conj, z) = if e_cj < e_id {
        (true, z_cj)
    } else {
        (false, z_id)
    };
    (0..len)
        .map(|i| {
            if i <= mid {
                fwd[i]
            } else if conj {
                z * bwd[i].conj()
            } else {
                z * bwd[i]
            }
        })
        .collect()
}

fn weighted_residual<T: Real>(data: &AutocorrData<T>, x: &[T], y: &[T]) -> T {
    let (a, b) = split_autocorr(x, y, data.k_min());
    residual_of(data, &a, &b)
}

fn residual_of<T: Real>(data: &AutocorrData<T>, a: &[T], b: &[T]) -> T {
    let norm = max_abs(&data.a);
    let mut worst = T::zero();
    for (u, v) in a.iter().zip(&data.a) {
        worst = worst.max((*u - *v).abs());
    }
    if data.has_b() {
        for (u, v) in b.iter().zip(&data.b) {
            worst = worst.max((*u - *v).abs());
        }
    }
    if norm > T::zero() {
        worst / norm
    } else {
        worst
    }
}

/// Backward errors within this factor of the best count as equally good.
const SELECTION_SLACK: f64 = 4.0;
/// A detected branch that fits to this backward error ...
const CONFIDENT_FIT: f64 = 1e-6;
/// ... with a pivot whose imaginary part is at least this fraction of its
/// modulus is kept without trying the other branches.
const CLEAR_IMAGINARY: f64 = 1e-3;

/// Polishes every branch of the recursion and keeps the best one.
///
/// Each forward branch (detected pivot, forced pivot at every index, all
/// real) is polished from its own values and from a splice with the
/// reversed recursion. A candidate is admissible if its pivot keeps an
/// imaginary part above `tol_imag`. Among admissible candidates whose
/// backward error is within [`SELECTION_SLACK`] of the smallest, the one
/// with the latest pivot wins, so data that a real-at-order solution
/// explains are not assigned an imaginary part that only fits noise.
fn select_candidate<T: Real>(
    data: &AutocorrData<T>,
    options: &RecoveryOptions<T>,
    natural: &Result<Recursed<T>>,
) -> Option<Recursed<T>> {
    let span = data.k_max() - data.k_min();
    let span = span as usize;
    let complex = |x: &[T], y: &[T]| -> Vec<Complex<T>> {
        x.iter().zip(y).map(|(a, b)| Complex::new(*a, *b)).collect()
    };

    let reversed_data = reversed(data);
    let tails: Vec<Vec<Complex<T>>> = [Branch::Detect, Branch::Real]
        .into_iter()
        .filter_map(|b| recurse(&reversed_data, options, b).ok())
        .map(|(x, y, _, _)| complex(&x, &y).into_iter().rev().collect())
        .collect();

    let polish_branch =
        |(x, y, pivot, steps): Recursed<T>| -> Option<(T, Option<usize>, Recursed<T>)> {
            let free_from = pivot.unwrap_or(span + 1);
            let fwd = complex(&x, &y);
            let mut starts = vec![(x.clone(), y.clone())];
            for tail in &tails {
                let joined = splice(&fwd, tail);
                let sx = joined.iter().map(|c| c.re).collect();
                let sy = joined
                    .iter()
                    .enumerate()
                    .map(|(i, c)| if i < free_from { T::zero() } else { c.im })
                    .collect();
                starts.push((sx, sy));
            }
            let mut best: Option<(T, Vec<T>, Vec<T>)> = None;
            for (sx, sy) in starts {
                let polished = refine::polish(data, &sx, &sy, free_from);
                let err = refine::backward_error(data, &polished.x, &polished.y);
                if polished.x[0] > T::zero() && best.as_ref().is_none_or(|b| err < b.0) {
                    best = Some((err, polished.x, polished.y));
                }
            }
            let own = refine::backward_error(data, &x, &y);
            let (err, px, py) = match best {
                Some(b) if b.0 <= own => b,
                _ => (own, x, y),
            };
            if !err.is_finite() {
                return None;
            }
            if let Some(p) = pivot {
                if !(py[p].abs() > options.tol_imag * px[0]) {
                    return None;
                }
            }
            Some((err, pivot, (px, py, pivot, steps)))
        };

    // (backward error, pivot, candidate)
    let mut scored = Vec::new();
    let detected = natural.as_ref().ok().map(|r| r.2);
    if let Some(first) = natural.as_ref().ok().cloned().and_then(polish_branch) {
        let (x, y) = (&first.2 .0, &first.2 .1);
        let clear = first
            .1
            .is_none_or(|p| y[p].abs() >= T::lit(CLEAR_IMAGINARY) * x[p].hypot(y[p]));
        if first.0 <= T::tol(CONFIDENT_FIT) && clear {
            return Some(first.2);
        }
        scored.push(first);
    }
    for b in (1..=span).map(Branch::At).chain([Branch::Real]) {
        let pivot = match b {
            Branch::At(p) => Some(p),
            _ => None,
        };
        if detected == Some(pivot) {
            continue;
        }
        if let Some(c) = recurse(data, options, b).ok().and_then(polish_branch) {
            scored.push(c);
        }
    }

    let best = scored.iter().map(|c| c.0).fold(T::infinity(), T::min);
    let accept = best * T::lit(SELECTION_SLACK) + T::epsilon() * T::lit(16.0);
    scored
        .into_iter()
        .filter(|c| c.0 <= accept)
        .max_by_key(|c| c.1.map_or(usize::MAX, |p| p))
        .map(|c| c.2)
}

/// Recovers the canonical coefficients from a complete `(A, B)` pair.
pub fn recover_coefficients<T: Real>(
    data: &AutocorrData<T>,
    options: &RecoveryOptions<T>,
) -> Result<RecoveryResult<T>> {
    data.validate()?;
    if !data.has_b() {
        return Err(CprError::DimensionMismatch("B sequence not filled".into()));
    }
    let natural = recurse(data, options, Branch::Detect);
    let natural_residual = match &natural {
        Ok((x, y, _, _)) => weighted_residual(data, x, y),
        Err(_) => T::infinity(),
    };
    let run_polish = match options.refinement {
        Refinement::Off => false,
        Refinement::Fallback => !(natural_residual <= T::tol(REFINE_RESIDUAL)),
        Refinement::Always => data.k_max() > data.k_min(),
    };
    let (x, y, pivot, steps) = if run_polish {
        match select_candidate(data, options, &natural) {
            Some(best) => best,
            None => natural.clone()?,
        }
    } else {
        natural.clone()?
    };
    let residual = weighted_residual(data, &x, &y);
    if !(residual <= T::tol(INCONSISTENT_RESIDUAL)) {
        // A failed branch decision explains the misfit better than the residual.
        natural?;
        return Err(CprError::InconsistentData {
            residual: residual.as_f64(),
        });
    }

    let tilde: Vec<Complex<T>> = x
        .iter()
        .zip(&y)
        .map(|(a, b)| Complex::new(*a, *b))
        .collect();
    let coeffs = untilde_coeffs(&tilde, data.k_min(), data.lambda, data.beta);
    let signal = GaussianSignal::trimmed(data.lambda, data.beta, data.k_min(), coeffs)?;
    if signal.is_zero() {
        return Err(CprError::ZeroSignal);
    }
    let signal = canonicalize(&signal);

    let (a_fit, b_fit) = split_autocorr(&x, &y, data.k_min());
    let norm = max_abs(&data.a);
    let entry_residual = |src: Source| {
        let (fit, want) = match src {
            Source::A(n) => (a_fit[n], data.a[n]),
            Source::B(n) => (b_fit[n], data.b[n]),
        };
        (fit - want).abs() / norm
    };
    let branch_trace = steps
        .into_iter()
        .map(|(j, formula, src)| StepRecord {
            k: data.k_min() + j as i64,
            formula: formula.to_string(),
            residual: entry_residual(src),
        })
        .collect();

    Ok(RecoveryResult {
        signal,
        pivot_index: pivot.map(|p| data.k_min() + p as i64),
        max_residual: residual,
        condition_a: T::one(),
        condition_b: T::one(),
        branch_trace,
    })
}

/// Full pipeline: samples → `A` → `B` → coefficients.
///
/// Internally the samples are translated so the window starts at index 0,
/// which makes `B` coincide with the shift-free sequence the recursion
/// uses; the result is translated back.
pub fn reconstruct<T: Real>(
    samples: &SampleSet<T>,
    k_min: i64,
    k_max: i64,
    lambda: T,
    beta: T,
    options: &RecoveryOptions<T>,
) -> Result<RecoveryResult<T>> {
    let span = k_max - k_min;
    let lo = -(span / 2);
    let shift = k_min - lo;
    let local = samples.translated(-beta * T::from_int(shift));
    let fit_a = recover_a(&local, lo, lo + span, lambda, beta)?;
    let fit_b = recover_b_tol(&local, &fit_a.data, options.d_tolerance)?;
    let mut result = recover_coefficients(&fit_b.data, options)?;
    result.signal = result.signal.shifted(shift);
    result.pivot_index = result.pivot_index.map(|p| p + shift);
    for step in &mut result.branch_trace {
        step.k += shift;
    }
    result.condition_a = fit_a.condition;
    result.condition_b = fit_b.condition;
    Ok(result)
}

/// Condition estimate of the moment system `reconstruct` solves for `A`,
/// available even when the later stages fail.
pub fn sample_conditioning<T: Real>(
    samples: &SampleSet<T>,
    k_min: i64,
    k_max: i64,
    lambda: T,
    beta: T,
) -> Result<T> {
    let span = k_max - k_min;
    let lo = -(span / 2);
    let local = samples.translated(-beta * T::from_int(k_min - lo));
    Ok(recover_a(&local, lo, lo + span, lambda, beta)?.condition)
}

/// `max_m max(|A_m(g) - A_m|, |B_m(g) - B_m|) / ||A||∞` for a candidate
/// signal `g`; entries outside the candidate's window count as zero.
pub fn verify_signal_against_data<T: Real>(
    signal: &GaussianSignal<T>,
    data: &AutocorrData<T>,
) -> Result<T> {
    let len = data.a.len();
    let mut a = vec![T::zero(); len];
    let mut b = vec![T::zero(); len];
    if !signal.is_zero() {
        let fit = AutocorrData::from_signal(signal)?;
        for p in 0..len {
            let m = data.m_min + p as i64;
            a[p] = fit.a_at(m);
            b[p] = fit.b_at(m);
        }
    }
    Ok(residual_of(data, &a, &b))
}

/// Residual of a recovery result against the data it should reproduce.
pub fn verify_against_data<T: Real>(
    result: &RecoveryResult<T>,
    data: &AutocorrData<T>,
) -> Result<T> {
    verify_signal_against_data(&result.signal, data)
}

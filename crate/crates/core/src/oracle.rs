//! Brute-force cross-checks, independent of the production pipeline.
//!
//! * [`fit_a_dense`] / [`fit_b_dense`] refit the autocorrelations from a
//!   dense grid with an SVD least-squares solve.
//! * [`symbolic_step_check`] expands `A`, `B` directly from random tilde
//!   coefficients and tests each closed-form recursion step against truth.
//! * [`exhaustive_two_term`] enumerates every two-term solution.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autocorr::AutocorrData;
use crate::error::{CprError, Result};
use crate::recover::formulas::{self, naive, Frame};
use crate::recover::{recover_coefficients, RecoveryOptions};
use crate::signal::GaussianSignal;

/// Least-squares refit of an autocorrelation sequence on a dense grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseGridFit {
    pub grid: Vec<f64>,
    /// `|f|²` (or `|d|²`) on the grid.
    pub values: Vec<f64>,
    /// Fitted `A_m` (or `B_m`), `m = 2K_- ..= 2K_+`.
    pub recovered: Vec<f64>,
    /// `max |model - values| / max |values|`.
    #[serde(deserialize_with = "crate::json::nan_if_null")]
    pub residual: f64,
}

fn dense_fit(
    signal: &GaussianSignal<f64>,
    grid_size: usize,
    values_of: impl Fn(f64) -> f64,
) -> Result<DenseGridFit> {
    if signal.is_zero() {
        return Err(CprError::ZeroSignal);
    }
    let (lambda, beta) = (signal.lambda(), signal.beta());
    let m_min = 2 * signal.k_min();
    let cols = 2 * signal.span() + 1;
    if grid_size < 4 * cols {
        return Err(CprError::InsufficientSamples {
            required: 4 * cols,
            got: grid_size,
        });
    }
    let lo = beta * signal.k_min() as f64 - beta;
    let hi = beta * signal.k_max() as f64 + beta;
    let grid: Vec<f64> = (0..grid_size)
        .map(|i| lo + (hi - lo) * i as f64 / (grid_size - 1) as f64)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&x| values_of(x)).collect();
    // Half-lattice basis exp(-2λ(x - βm/2)²); A_m = r_m exp(-λβ²m²/2).
    let basis = DMatrix::from_fn(grid_size, cols, |i, p| {
        let m = (m_min + p as i64) as f64;
        (-2.0 * lambda * (grid[i] - beta * m / 2.0).powi(2)).exp()
    });
    let svd = basis.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 1e-14 * smax {
        return Err(CprError::RankDeficient {
            gap: smin / smax,
            threshold: 1e-14,
        });
    }
    let r = svd
        .solve(&DVector::from_vec(values.clone()), 0.0)
        .map_err(|e| CprError::DimensionMismatch(e.to_string()))?;
    let model = &basis * &r;
    let vmax = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let residual = model
        .iter()
        .zip(&values)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        / vmax.max(f64::MIN_POSITIVE);
    let recovered = r
        .iter()
        .enumerate()
        .map(|(p, v)| {
            let m = (m_min + p as i64) as f64;
            v * (-lambda * beta * beta * m * m / 2.0).exp()
        })
        .collect();
    Ok(DenseGridFit {
        grid,
        values,
        recovered,
        residual,
    })
}

/// `A` from `|f|²` on `grid_size` equispaced points over the support window
/// widened by `β` on each side.
pub fn fit_a_dense(signal: &GaussianSignal<f64>, grid_size: usize) -> Result<DenseGridFit> {
    dense_fit(signal, grid_size, |x| signal.evaluate(x).norm_sqr())
}

/// `B` from `|d|²`, `d` the companion signal with coefficients `k c_k`.
pub fn fit_b_dense(signal: &GaussianSignal<f64>, grid_size: usize) -> Result<DenseGridFit> {
    let d = signal.omega();
    dense_fit(signal, grid_size, |x| {
        if d.is_zero() {
            0.0
        } else {
            d.evaluate(x).norm_sqr()
        }
    })
}

/// A recursion step whose output disagreed with the known truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepFailure {
    pub formula: String,
    pub k_min: i64,
    pub trial: usize,
    #[serde(deserialize_with = "crate::json::nan_if_null")]
    pub expected: f64,
    #[serde(deserialize_with = "crate::json::nan_if_null")]
    pub got: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepCheckReport {
    /// Number of individual comparisons made.
    pub checks: usize,
    pub failures: Vec<StepFailure>,
}

impl StepCheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn merge(&mut self, other: StepCheckReport) {
        self.checks += other.checks;
        self.failures.extend(other.failures);
    }

    /// Names of the formulas that failed at least once.
    pub fn failed_formulas(&self) -> Vec<String> {
        let mut names: Vec<String> = self.failures.iter().map(|f| f.formula.clone()).collect();
        names.sort();
        names.dedup();
        names
    }

    fn check(&mut self, formula: &str, k_min: i64, trial: usize, expected: f64, got: f64) {
        self.check_amplified(formula, k_min, trial, expected, got, 1.0);
    }

    /// As `check`, with the tolerance widened by `gain`, the factor by which
    /// the step amplifies rounding.
    fn check_amplified(
        &mut self,
        formula: &str,
        k_min: i64,
        trial: usize,
        expected: f64,
        got: f64,
        gain: f64,
    ) {
        self.checks += 1;
        let tol = STEP_TOLERANCE * (1.0 + expected.abs()) * gain.max(1.0);
        if !((got - expected).abs() <= tol) {
            self.failures.push(StepFailure {
                formula: formula.to_string(),
                k_min,
                trial,
                expected,
                got,
            });
        }
    }
}

/// Agreement required of each step on exact data.
pub const STEP_TOLERANCE: f64 = 1e-10;

/// Shape of the random tilde sequence drawn for a trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Draw {
    /// Generic complex coefficients.
    Complex,
    /// First `p - 1` coefficients after the leading one real.
    Pivot(usize),
    /// All real.
    Real,
}

fn draw_tilde(rng: &mut ChaCha8Rng, len: usize, shape: Draw) -> Vec<Complex<f64>> {
    let mut c: Vec<Complex<f64>> = (0..len)
        .map(|_| {
            let r = rng.random_range(0.3..1.0);
            let t = rng.random_range(0.0..std::f64::consts::TAU);
            Complex::from_polar(r, t)
        })
        .collect();
    c[0] = Complex::new(c[0].norm(), 0.0);
    let real_upto = match shape {
        Draw::Complex => 0,
        Draw::Pivot(p) => p.min(len),
        Draw::Real => len,
    };
    for z in c.iter_mut().take(real_upto) {
        z.im = 0.0;
    }
    if let Draw::Pivot(p) = shape {
        if p < len && c[p].im.abs() < 0.2 {
            c[p].im = 0.2f64.copysign(c[p].im);
        }
    }
    c
}

/// `A_m`, `B_m` by the defining double sums over absolute indices.
fn expand(tilde: &[Complex<f64>], k_min: i64) -> (Vec<f64>, Vec<f64>) {
    let len = tilde.len() as i64;
    let k_max = k_min + len - 1;
    let at = |k: i64| {
        if k < k_min || k > k_max {
            Complex::new(0.0, 0.0)
        } else {
            tilde[(k - k_min) as usize]
        }
    };
    let mut a = Vec::new();
    let mut b = Vec::new();
    for m in 2 * k_min..=2 * k_max {
        let mut sa = Complex::new(0.0, 0.0);
        let mut sb = Complex::new(0.0, 0.0);
        for j in k_min..=k_max {
            let t = at(m - j) * at(j).conj();
            sa += t;
            sb += t * ((m - j) * j) as f64;
        }
        a.push(sa.re);
        b.push(sb.re);
    }
    (a, b)
}

fn data_of(tilde: &[Complex<f64>], k_min: i64) -> AutocorrData<f64> {
    let (a, b) = expand(tilde, k_min);
    AutocorrData {
        m_min: 2 * k_min,
        a,
        b,
        lambda: 1.0,
        beta: 1.0,
    }
}

fn trial_rng(k_min: i64, k_max: i64, trial: usize, salt: u64) -> ChaCha8Rng {
    let seed = (k_min as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (k_max as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ (trial as u64).wrapping_mul(0x1656_67B1_9E37_79F9)
        ^ salt;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Runs every re-derived recursion step on `trials` random tilde sequences
/// over `k_min ..= k_max` (at most five coefficients) and reports mismatches
/// against the known truth.
pub fn symbolic_step_check(k_min: i64, k_max: i64, trials: usize) -> StepCheckReport {
    assert!(
        k_max >= k_min && k_max - k_min <= 4,
        "window of 1 to 5 coefficients"
    );
    let span = (k_max - k_min) as usize;
    let len = span + 1;
    let mut report = StepCheckReport::default();
    for trial in 0..trials {
        let mut rng = trial_rng(k_min, k_max, trial, 1);
        let c = draw_tilde(&mut rng, len, Draw::Complex);
        let data = data_of(&c, k_min);
        let f = Frame::new(&data);
        let x: Vec<f64> = c.iter().map(|z| z.re).collect();
        let y: Vec<f64> = c.iter().map(|z| z.im).collect();
        // Steps that divide by Im c_1 amplify rounding by |c| / |Im c_1|.
        let gain =
            c.iter().map(|z| z.norm()).fold(0.0, f64::max) / y.get(1).map_or(1.0, |v| v.abs());
        let re = |i: usize| x.get(i).copied().unwrap_or(0.0);

        report.check("leading", k_min, trial, x[0], formulas::leading(&f));
        if span >= 1 {
            report.check("re_first", k_min, trial, x[1], formulas::re_first(&f));
            report.check("re_second", k_min, trial, re(2), formulas::re_second(&f));
            report.check(
                "im_first_sq",
                k_min,
                trial,
                y[1] * y[1],
                formulas::im_first_sq(&f),
            );
        }
        if span >= 2 {
            report.check("re_third", k_min, trial, re(3), formulas::re_third(&f));
            let cross = x[1] * x[2] + y[1] * y[2];
            report.check(
                "cross_first_second",
                k_min,
                trial,
                cross,
                formulas::cross_first_second(&f),
            );
            report.check_amplified(
                "im_from_cross",
                k_min,
                trial,
                y[2],
                formulas::im_from_cross(cross, x[1], y[1], x[2]),
                gain,
            );
            for k in 2..=span {
                let truth = x[k] * x[1] + y[k] * y[1];
                let got = formulas::cross_with_first(&f, &x, &y, k_min + k as i64);
                report.check("cross_with_first", k_min, trial, truth, got);
            }
        }
        // General routines with the unknown entry zeroed, as in the recursion.
        for n in 1..=span {
            let mut xs = x.clone();
            xs[n] = 0.0;
            let mut ys = y.clone();
            for v in ys.iter_mut().skip(n) {
                *v = 0.0;
            }
            for v in xs.iter_mut().skip(n) {
                *v = 0.0;
            }
            report.check(
                "solve_re",
                k_min,
                trial,
                x[n],
                formulas::solve_re(&f, &xs, &ys, n),
            );
        }
        if span >= 1 {
            let (sq, _) = formulas::pivot_im_sq(&f, &masked(&x, 2), &masked(&y, 1), 1);
            report.check("pivot_im_sq", k_min, trial, y[1] * y[1], sq);
            for k in 2..=span {
                let (xs, ys) = (masked(&x, k + 1), masked_im(&y, 1, k));
                if k < span {
                    let got = formulas::im_from_d(&f, &xs, &ys, k, 1);
                    report.check_amplified("im_from_d", k_min, trial, y[k], got, gain);
                } else {
                    let got = formulas::im_from_a(&f, &masked(&x, k + 1), &ys, k, 1);
                    report.check_amplified("im_from_a", k_min, trial, y[k], got, gain);
                }
            }
        }

        // Real leading part: pivot at 2 and 3.
        for p in 2..=span.min(3) {
            let mut rng = trial_rng(k_min, k_max, trial, 10 + p as u64);
            let c = draw_tilde(&mut rng, len, Draw::Pivot(p));
            let data = data_of(&c, k_min);
            let f = Frame::new(&data);
            let x: Vec<f64> = c.iter().map(|z| z.re).collect();
            let y: Vec<f64> = c.iter().map(|z| z.im).collect();
            let re = |i: usize| x.get(i).copied().unwrap_or(0.0);
            if p == 2 {
                let got = formulas::pivot2_im_sq(&f, x[1], x[2], re(3));
                report.check("pivot2_im_sq", k_min, trial, y[2] * y[2], got);
            }
            let (sq, _) = formulas::pivot_im_sq(&f, &masked(&x, 2 * p), &masked(&y, 0), p);
            report.check(
                &format!("pivot_im_sq[p={p}]"),
                k_min,
                trial,
                y[p] * y[p],
                sq,
            );
            report.merge(chain_check(
                &data,
                &c,
                k_min,
                trial,
                &format!("chain[p={p}]"),
            ));
        }
        report.merge(chain_check(
            &data_of(&c, k_min),
            &c,
            k_min,
            trial,
            "chain[p=1]",
        ));

        let mut rng = trial_rng(k_min, k_max, trial, 20);
        let c = draw_tilde(&mut rng, len, Draw::Real);
        report.merge(chain_check(
            &data_of(&c, k_min),
            &c,
            k_min,
            trial,
            "chain[real]",
        ));
    }
    report
}

/// `v` with entries from `from` on set to zero.
fn masked(v: &[f64], from: usize) -> Vec<f64> {
    v.iter()
        .enumerate()
        .map(|(i, x)| if i < from { *x } else { 0.0 })
        .collect()
}

/// Imaginary parts known at the pivot `p` and below `k`, zero elsewhere.
fn masked_im(y: &[f64], p: usize, k: usize) -> Vec<f64> {
    y.iter()
        .enumerate()
        .map(|(i, v)| if i <= p || (i > p && i < k) { *v } else { 0.0 })
        .collect()
}

/// The full recursion (with polish) must return the truth or its conjugate.
fn chain_check(
    data: &AutocorrData<f64>,
    truth: &[Complex<f64>],
    k_min: i64,
    trial: usize,
    name: &str,
) -> StepCheckReport {
    let mut report = StepCheckReport::default();
    let options = RecoveryOptions::default();
    let got = match recover_coefficients(data, &options) {
        Ok(r) => r.signal,
        Err(_) => {
            report.check(name, k_min, trial, 0.0, f64::NAN);
            return report;
        }
    };
    // Compare in tilde form; the recursion fixes c̃_{K_-} > 0, so only the
    // conjugation is free.
    let tilde = crate::autocorr::tilde_coeffs(&got);
    let have: Vec<Complex<f64>> = (0..truth.len())
        .map(|j| {
            let k = k_min + j as i64;
            if k >= got.k_min() && k <= got.k_max() {
                tilde[(k - got.k_min()) as usize]
            } else {
                Complex::new(0.0, 0.0)
            }
        })
        .collect();
    let err = |flip: bool| {
        truth
            .iter()
            .zip(&have)
            .map(|(t, h)| (if flip { t.conj() } else { *t } - h).norm())
            .fold(0.0f64, f64::max)
    };
    let flip = err(true) < err(false);
    for (z, h) in truth.iter().zip(&have) {
        let want = if flip { z.conj() } else { *z };
        report.check(name, k_min, trial, want.re, h.re);
        report.check(name, k_min, trial, want.im, h.im);
    }
    report
}

/// Runs the uncorrected variants on the same kind of data. A correct oracle
/// reports failures here.
pub fn naive_step_check(k_min: i64, k_max: i64, trials: usize) -> StepCheckReport {
    assert!(
        k_max >= k_min + 2 && k_max - k_min <= 4,
        "window of 3 to 5 coefficients"
    );
    let len = (k_max - k_min + 1) as usize;
    let mut report = StepCheckReport::default();
    for trial in 0..trials {
        let mut rng = trial_rng(k_min, k_max, trial, 1);
        let c = draw_tilde(&mut rng, len, Draw::Complex);
        let data = data_of(&c, k_min);
        let f = Frame::new(&data);
        report.check(
            "naive::im_first_sq",
            k_min,
            trial,
            c[1].im * c[1].im,
            naive::im_first_sq(&f),
        );
        let cross = c[1].re * c[2].re + c[1].im * c[2].im;
        report.check(
            "naive::cross_first_second",
            k_min,
            trial,
            cross,
            naive::cross_first_second(&f),
        );

        let mut rng = trial_rng(k_min, k_max, trial, 12);
        let c = draw_tilde(&mut rng, len, Draw::Pivot(2));
        let data = data_of(&c, k_min);
        let f = Frame::new(&data);
        let re3 = c.get(3).map_or(0.0, |z| z.re);
        report.check(
            "naive::pivot2_im_sq",
            k_min,
            trial,
            c[2].im * c[2].im,
            naive::pivot2_im_sq(&f, c[1].re, c[2].re, re3),
        );
    }
    report
}

/// Every `(c̃_0, c̃_1)` with `c̃_0 > 0` consistent with a two-term
/// autocorrelation pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoTermSolutions {
    pub candidates: Vec<[Complex<f64>; 2]>,
    /// `c̃_1 = 0`, which contradicts a support ending at `K_- + 1`.
    pub degenerate_trailing: bool,
}

impl TwoTermSolutions {
    pub fn contains(&self, pair: [Complex<f64>; 2], tol: f64) -> bool {
        self.candidates
            .iter()
            .any(|c| (c[0] - pair[0]).norm() <= tol && (c[1] - pair[1]).norm() <= tol)
    }
}

/// Closed-form enumeration for window `k_min ..= k_min + 1`.
pub fn exhaustive_two_term(a: [f64; 3], b: [f64; 3], k_min: i64) -> Result<TwoTermSolutions> {
    if !(a[0] > 0.0) {
        return Err(CprError::InvalidLeadingCoefficient { value: a[0] });
    }
    let x0 = a[0].sqrt();
    let x1 = a[1] / (2.0 * x0);
    let k = k_min as f64;
    // |c̃_1|² from B, cross-checked against A.
    let mod1 = b[2] - k * (k + 2.0) * a[2];
    let scale = a.iter().chain(&b).fold(0.0f64, |m, v| m.max(v.abs()));
    if (mod1 - a[2]).abs() > 1e-10 * scale {
        return Err(CprError::InconsistentData {
            residual: (mod1 - a[2]).abs() / scale,
        });
    }
    let disc = mod1 - x1 * x1;
    if disc < -1e-10 * scale {
        return Err(CprError::InconsistentData {
            residual: -disc / scale,
        });
    }
    let lead = Complex::new(x0, 0.0);
    let candidates = if disc > 1e-12 * scale {
        let y1 = disc.sqrt();
        vec![[lead, Complex::new(x1, y1)], [lead, Complex::new(x1, -y1)]]
    } else {
        vec![[lead, Complex::new(x1, 0.0)]]
    };
    let degenerate_trailing = candidates.iter().all(|c| c[1].norm() <= 1e-12 * x0);
    Ok(TwoTermSolutions {
        candidates,
        degenerate_trailing,
    })
}

//! Exponential-node moment systems.
//!
//! `exp(2λγ²)|f(γ)|² = Σ_{m=m_min}^{m_max} A_m u^m` with `u = exp(2λβγ)`, and the
//! same for `|d|²` and `B_m`. Factoring out `u^{m_min}` leaves polynomial
//! interpolation in the nodes `u`. Nodes are additionally centred,
//! `t = u / exp(λβ(γ_min + γ_max))`, which rescales the unknowns by powers of
//! the centre and keeps `t` near 1.

mod vandermonde;

pub use vandermonde::{bjorck_pereyra, condition_one_square, vandermonde_matrix};

use crate::autocorr::{AutocorrData, D_MODULUS_TOLERANCE};
use crate::error::{CprError, Result};
use crate::linalg::{HouseholderQr, Matrix};
use crate::scalar::{compensated_sum, max_abs, Real};
use crate::signal::SampleSet;

/// Nodes closer than this fraction of the largest node are unresolvable.
pub const MIN_RELATIVE_NODE_GAP: f64 = 1e-13;
/// Condition estimate above which callers should warn.
pub const CONDITION_WARNING: f64 = 1e12;

/// One exponential-moment system: find `X_m`, `m_min ..= m_max`, with
/// `Σ_m X_m exp(2λβ m γ_n) = values_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentProblem<T> {
    gammas: Vec<T>,
    values: Vec<T>,
    m_min: i64,
    m_max: i64,
    lambda: T,
    beta: T,
}

/// Solution of a [`MomentProblem`].
#[derive(Clone, Debug, PartialEq)]
pub struct MomentSolution<T> {
    /// `X_m` for `m = m_min ..= m_max`.
    pub coeffs: Vec<T>,
    /// 1-norm condition estimate of the centred Vandermonde matrix.
    pub condition: T,
    /// `max_n |Σ_m X_m u_n^m - values_n| / ||values||∞`.
    pub residual: T,
}

impl<T: Real> MomentProblem<T> {
    /// `values` are the scaled squared magnitudes `exp(2λγ²)|·|²`. Points are
    /// sorted internally, so the input order does not matter.
    pub fn new(
        gammas: Vec<T>,
        values: Vec<T>,
        m_min: i64,
        m_max: i64,
        lambda: T,
        beta: T,
    ) -> Result<Self> {
        if gammas.len() != values.len() {
            return Err(CprError::DimensionMismatch(format!(
                "{} points but {} values",
                gammas.len(),
                values.len()
            )));
        }
        if m_max < m_min {
            return Err(CprError::DimensionMismatch(format!(
                "empty exponent range {m_min}..={m_max}"
            )));
        }
        let unknowns = (m_max - m_min + 1) as usize;
        if gammas.len() < unknowns {
            return Err(CprError::InsufficientSamples {
                required: unknowns,
                got: gammas.len(),
            });
        }
        if gammas.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(CprError::InvalidSamples("non-finite point or value".into()));
        }
        if !(lambda > T::zero() && beta > T::zero()) {
            return Err(CprError::InvalidSignal(
                "lambda and beta must be positive".into(),
            ));
        }
        let mut pairs: Vec<(T, T)> = gammas.into_iter().zip(values).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(CprError::DuplicateNodes);
        }
        let (gammas, values) = pairs.into_iter().unzip();
        Ok(Self {
            gammas,
            values,
            m_min,
            m_max,
            lambda,
            beta,
        })
    }

    /// Builds the system from squared magnitudes `|·|²` at each point.
    pub fn from_squared_moduli(
        gammas: Vec<T>,
        squared: Vec<T>,
        m_min: i64,
        m_max: i64,
        lambda: T,
        beta: T,
    ) -> Result<Self> {
        let two_l = T::lit(2.0) * lambda;
        let values = gammas
            .iter()
            .zip(&squared)
            .map(|(&g, &s)| s * (two_l * g * g).exp())
            .collect();
        Self::new(gammas, values, m_min, m_max, lambda, beta)
    }

    pub fn gammas(&self) -> &[T] {
        &self.gammas
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn unknowns(&self) -> usize {
        (self.m_max - self.m_min + 1) as usize
    }

    /// `ln` of the centring factor, `λβ(γ_min + γ_max)`.
    fn log_center(&self) -> T {
        let (lo, hi) = (self.gammas[0], self.gammas[self.gammas.len() - 1]);
        self.lambda * self.beta * (lo + hi)
    }

    fn centred_nodes(&self) -> Vec<T> {
        centred_nodes(&self.gammas, self.lambda, self.beta)
    }
}

fn centred_nodes<T: Real>(sorted_gammas: &[T], lambda: T, beta: T) -> Vec<T> {
    let lb = lambda * beta;
    let center = lb * (sorted_gammas[0] + sorted_gammas[sorted_gammas.len() - 1]);
    sorted_gammas
        .iter()
        .map(|&g| (T::lit(2.0) * lb * g - center).exp())
        .collect()
}

fn check_gaps<T: Real>(nodes: &[T]) -> Result<()> {
    if nodes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CprError::DuplicateNodes);
    }
    let max = nodes.last().copied().unwrap_or_else(T::one);
    let gap = nodes
        .windows(2)
        .fold(T::infinity(), |g, w| g.min(w[1] - w[0]));
    let threshold = T::tol(MIN_RELATIVE_NODE_GAP);
    if nodes.len() > 1 && gap < threshold * max {
        return Err(CprError::RankDeficient {
            gap: (gap / max).as_f64(),
            threshold: threshold.as_f64(),
        });
    }
    Ok(())
}

/// 1-norm condition estimate of the centred Vandermonde matrix with
/// `m_count` columns on the given nodes. Square systems use the exact
/// inverse; tall ones the least-squares pseudo-inverse.
fn condition_of<T: Real>(nodes: &[T], m_count: usize) -> T {
    if nodes.len() == m_count {
        return condition_one_square(nodes);
    }
    let v = vandermonde_matrix(nodes, m_count);
    let Ok(qr) = HouseholderQr::new(&v) else {
        return T::infinity();
    };
    // Column j of the pseudo-inverse is the least-squares solution for e_j.
    let rows = nodes.len();
    let mut inv_norm = T::zero();
    let mut e = vec![T::zero(); rows];
    for j in 0..rows {
        e.iter_mut().for_each(|x| *x = T::zero());
        e[j] = T::one();
        match qr.solve(&e) {
            Ok(col) => inv_norm = inv_norm.max(col.iter().fold(T::zero(), |s, c| s + c.abs())),
            Err(_) => return T::infinity(),
        }
    }
    v.norm_one() * inv_norm
}

/// Solves the moment system. Square systems go through Björck–Pereyra;
/// oversampled ones through Householder least squares with rows scaled by
/// their largest entry.
pub fn solve_moments<T: Real>(problem: &MomentProblem<T>) -> Result<MomentSolution<T>> {
    let nodes = problem.centred_nodes();
    check_gaps(&nodes)?;
    let lb2 = T::lit(2.0) * problem.lambda * problem.beta;
    let m_min = T::from_int(problem.m_min);
    // Right-hand side after dividing out u^{m_min}.
    let rhs: Vec<T> = problem
        .gammas
        .iter()
        .zip(&problem.values)
        .map(|(&g, &v)| v * (-lb2 * m_min * g).exp())
        .collect();
    let cols = problem.unknowns();
    let scaled = if nodes.len() == cols {
        bjorck_pereyra(&nodes, &rhs)
    } else {
        let top = cols as i32 - 1;
        let row_scale: Vec<T> = nodes.iter().map(|t| T::one().max(t.powi(top))).collect();
        let v = Matrix::from_fn(nodes.len(), cols, |i, p| {
            nodes[i].powi(p as i32) / row_scale[i]
        });
        let b: Vec<T> = rhs.iter().zip(&row_scale).map(|(r, s)| *r / *s).collect();
        let qr = HouseholderQr::new(&v)?;
        let ratio = qr.diag_ratio();
        if ratio < T::epsilon() {
            return Err(CprError::RankDeficient {
                gap: ratio.as_f64(),
                threshold: T::epsilon().as_f64(),
            });
        }
        qr.solve(&b)?
    };
    // Undo the centring: X_p = Y_p exp(-p c).
    let c = problem.log_center();
    let coeffs: Vec<T> = scaled
        .iter()
        .enumerate()
        .map(|(p, y)| *y * (-c * T::from_int(p as i64)).exp())
        .collect();
    let residual = moment_residual(problem, &coeffs);
    Ok(MomentSolution {
        coeffs,
        condition: condition_of(&nodes, cols),
        residual,
    })
}

fn moment_residual<T: Real>(problem: &MomentProblem<T>, coeffs: &[T]) -> T {
    let lb2 = T::lit(2.0) * problem.lambda * problem.beta;
    let norm = max_abs(&problem.values);
    let worst = problem
        .gammas
        .iter()
        .zip(&problem.values)
        .map(|(&g, &v)| {
            let terms = coeffs.iter().enumerate().map(|(p, x)| {
                let m = T::from_int(problem.m_min + p as i64);
                *x * (lb2 * m * g).exp()
            });
            (compensated_sum(terms) - v).abs()
        })
        .fold(T::zero(), T::max);
    if norm > T::zero() {
        worst / norm
    } else {
        worst
    }
}

/// Condition estimate of the centred `nodes x m_count` Vandermonde matrix
/// built from the sample points. One node gives 1.
pub fn condition_report<T: Real>(gammas: &[T], lambda: T, beta: T, m_count: usize) -> T {
    let mut sorted = gammas.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let nodes = centred_nodes(&sorted, lambda, beta);
    condition_of(&nodes, m_count)
}

/// An autocorrelation sequence recovered from samples, with diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentFit<T: Real> {
    pub data: AutocorrData<T>,
    pub condition: T,
    pub residual: T,
}

fn required_samples(k_min: i64, k_max: i64) -> usize {
    (2 * (k_max - k_min) + 1) as usize
}

/// Leading-coefficient sanity check in half-lattice form, where every entry
/// is on the same footing: `r_{2K_-} = |c_{K_-}|²` must not vanish.
fn check_leading<T: Real>(data: &AutocorrData<T>) -> Result<()> {
    let r = data.half_lattice();
    let scale = max_abs(&r);
    if !(data.a[0] > T::zero()) || !(r[0] > T::tol(1e-10) * scale) {
        return Err(CprError::InvalidLeadingCoefficient {
            value: data.a[0].as_f64(),
        });
    }
    Ok(())
}

/// Recovers `A_m`, `m = 2k_min ..= 2k_max`, from `|f(γ)|`.
pub fn recover_a<T: Real>(
    samples: &SampleSet<T>,
    k_min: i64,
    k_max: i64,
    lambda: T,
    beta: T,
) -> Result<MomentFit<T>> {
    if k_max < k_min {
        return Err(CprError::DimensionMismatch(format!(
            "empty support window {k_min}..={k_max}"
        )));
    }
    let required = required_samples(k_min, k_max);
    if samples.len() < required {
        return Err(CprError::InsufficientSamples {
            required,
            got: samples.len(),
        });
    }
    let squared = samples.points().iter().map(|p| p.mag_f * p.mag_f).collect();
    let problem = MomentProblem::from_squared_moduli(
        samples.gammas(),
        squared,
        2 * k_min,
        2 * k_max,
        lambda,
        beta,
    )?;
    let sol = solve_moments(&problem)?;
    let data = AutocorrData {
        m_min: 2 * k_min,
        a: sol.coeffs,
        b: Vec::new(),
        lambda,
        beta,
    };
    check_leading(&data)?;
    Ok(MomentFit {
        data,
        condition: sol.condition,
        residual: sol.residual,
    })
}

/// Recovers `B_m` from `|f(γ)|`, `|f'(γ)|` and an already recovered `A`.
pub fn recover_b<T: Real>(
    samples: &SampleSet<T>,
    data_a: &AutocorrData<T>,
) -> Result<MomentFit<T>> {
    recover_b_tol(samples, data_a, T::tol(D_MODULUS_TOLERANCE))
}

/// As [`recover_b`] with an explicit relative tolerance for clamping
/// negative `|d(γ)|²` residue.
pub fn recover_b_tol<T: Real>(
    samples: &SampleSet<T>,
    data_a: &AutocorrData<T>,
    d_tol: T,
) -> Result<MomentFit<T>> {
    data_a.validate()?;
    let required = data_a.a.len();
    if samples.len() < required {
        return Err(CprError::InsufficientSamples {
            required,
            got: samples.len(),
        });
    }
    let squared = samples
        .points()
        .iter()
        .map(|p| data_a.d_mag_sq_from_sample_tol(p, d_tol))
        .collect::<Result<Vec<T>>>()?;
    let problem = MomentProblem::from_squared_moduli(
        samples.gammas(),
        squared,
        data_a.m_min,
        data_a.m_max(),
        data_a.lambda,
        data_a.beta,
    )?;
    let sol = solve_moments(&problem)?;
    let mut data = data_a.clone();
    data.b = sol.coeffs;
    Ok(MomentFit {
        data,
        condition: sol.condition,
        residual: sol.residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autocorr::{autocorr_a, autocorr_b};
    use crate::signal::{default_sampling_grid, GaussianSignal};
    use num_complex::Complex;

    fn one_i() -> GaussianSignal<f64> {
        GaussianSignal::new(
            1.0,
            1.0,
            0,
            vec![Complex::new(1.0, 0.0), Complex::new(0.0, 1.0)],
        )
        .unwrap()
    }

    #[test]
    fn one_node_system() {
        let p = MomentProblem::new(vec![0.3f64], vec![2.5], 0, 0, 1.0, 1.0).unwrap();
        let s = solve_moments(&p).unwrap();
        assert!((s.coeffs[0] - 2.5).abs() < 1e-15);
        assert_eq!(s.condition, 1.0);
    }

    #[test]
    fn exact_a_of_one_i() {
        let s = one_i();
        let set = s
            .hermite_samples(&default_sampling_grid(0, 1, 1.0))
            .unwrap();
        let fit = recover_a(&set, 0, 1, 1.0, 1.0).unwrap();
        let e2 = (-2.0f64).exp();
        assert!((fit.data.a[0] - 1.0).abs() < 1e-10);
        assert!(fit.data.a[1].abs() < 1e-10);
        assert!((fit.data.a[2] - e2).abs() < 1e-10);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn homogeneous_system() {
        let p = MomentProblem::new(vec![-0.2, 0.4, 1.1], vec![0.0; 3], -2, 0, 1.0, 1.0).unwrap();
        assert!(solve_moments(&p).unwrap().coeffs.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn duplicate_and_close_nodes() {
        assert_eq!(
            MomentProblem::new(vec![0.1, 0.1], vec![1.0, 1.0], 0, 1, 1.0, 1.0),
            Err(CprError::DuplicateNodes)
        );
        let p = MomentProblem::new(vec![0.1, 0.1 + 1e-15], vec![1.0, 1.0], 0, 1, 1.0, 1.0).unwrap();
        assert!(matches!(
            solve_moments(&p),
            Err(CprError::RankDeficient { .. }) | Err(CprError::DuplicateNodes)
        ));
    }

    #[test]
    fn too_few_samples() {
        let set = one_i().hermite_samples(&[0.0, 1.0]).unwrap();
        assert_eq!(
            recover_a(&set, 0, 1, 1.0, 1.0).unwrap_err(),
            CprError::InsufficientSamples {
                required: 3,
                got: 2
            }
        );
    }

    #[test]
    fn b_of_one_i() {
        let s = one_i();
        let set = s
            .hermite_samples(&default_sampling_grid(0, 1, 1.0))
            .unwrap();
        let fit_a = recover_a(&set, 0, 1, 1.0, 1.0).unwrap();
        let fit = recover_b(&set, &fit_a.data).unwrap();
        let want = autocorr_b(&s).unwrap();
        for (x, y) in fit.data.b.iter().zip(&want) {
            assert!((x - y).abs() < 1e-8, "{x} vs {y}");
        }
    }

    #[test]
    fn single_coefficient_b_is_zero() {
        let s = GaussianSignal::<f64>::from_real(1.0, 1.0, 0, &[0.7]).unwrap();
        let set = s.hermite_samples(&[0.25]).unwrap();
        let fit_a = recover_a(&set, 0, 0, 1.0, 1.0).unwrap();
        assert!((fit_a.data.a[0] - 0.49).abs() < 1e-14);
        let fit = recover_b(&set, &fit_a.data).unwrap();
        assert!(fit.data.b[0].abs() < 1e-14);
    }

    #[test]
    fn permutation_invariant() {
        let s = GaussianSignal::<f64>::new(
            1.0,
            1.0,
            1,
            vec![
                Complex::new(0.5, 0.3),
                Complex::new(-0.2, 0.8),
                Complex::new(0.6, -0.4),
            ],
        )
        .unwrap();
        let mut g = default_sampling_grid(1, 3, 1.0);
        let a1 = recover_a(&s.hermite_samples(&g).unwrap(), 1, 3, 1.0, 1.0).unwrap();
        g.reverse();
        g.swap(0, 2);
        let a2 = recover_a(&s.hermite_samples(&g).unwrap(), 1, 3, 1.0, 1.0).unwrap();
        assert_eq!(a1.data.a, a2.data.a);
        let truth = autocorr_a(&s).unwrap();
        for (x, y) in a1.data.a.iter().zip(&truth) {
            assert!((x - y).abs() <= 1e-8 * y.abs().max(1e-300) || (x - y).abs() < 1e-16);
        }
    }

    #[test]
    fn wrong_window_detected() {
        let s = GaussianSignal::from_real(1.0, 1.0, 2, &[1.0, 0.5]).unwrap();
        let set = s
            .hermite_samples(&default_sampling_grid(0, 3, 1.0))
            .unwrap();
        assert!(matches!(
            recover_a(&set, 0, 3, 1.0, 1.0),
            Err(CprError::InvalidLeadingCoefficient { .. })
        ));
    }
}

//! Direct-summation oracles shared by the integration tests.

#![allow(dead_code)]

use gaussphase::Signal;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Coefficients with modulus in [0.2, 1] and uniform phase.
pub fn random_signal<R: Rng>(rng: &mut R, k_min: i64, n: usize, lambda: f64, beta: f64) -> Signal {
    let c = (0..=n)
        .map(|_| {
            Complex::from_polar(
                rng.random_range(0.2..=1.0),
                rng.random_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    Signal::new(lambda, beta, k_min, c).unwrap()
}

/// Sum over pairs `(k, j)` with `k + j = m`, weighted by `w(k, j)`, of
/// `c_k conj(c_j) exp(-λβ²(k² + j²))`, for `m = 2K_- ..= 2K_+`.
fn pair_sum(s: &Signal, w: impl Fn(i64, i64) -> f64) -> Vec<f64> {
    let lb2 = s.lambda() * s.beta() * s.beta();
    (2 * s.k_min()..=2 * s.k_max())
        .map(|m| {
            let mut acc = Complex::new(0.0, 0.0);
            for k in s.k_min()..=s.k_max() {
                let j = m - k;
                if j < s.k_min() || j > s.k_max() {
                    continue;
                }
                let g = (-lb2 * (k * k + j * j) as f64).exp();
                acc += s.coeff(k) * s.coeff(j).conj() * (g * w(k, j));
            }
            assert!(
                acc.im.abs() <= 1e-12 * acc.norm().max(1e-300),
                "pair sum not real"
            );
            acc.re
        })
        .collect()
}

pub fn direct_a(s: &Signal) -> Vec<f64> {
    pair_sum(s, |_, _| 1.0)
}

pub fn direct_b(s: &Signal) -> Vec<f64> {
    pair_sum(s, |k, j| (k * j) as f64)
}

/// `r_m` with `|f(x)|² = Σ_m r_m exp(-2λ(x - βm/2)²)`.
pub fn direct_r(s: &Signal) -> Vec<f64> {
    let lb2 = s.lambda() * s.beta() * s.beta();
    (2 * s.k_min()..=2 * s.k_max())
        .map(|m| {
            let mut acc = Complex::new(0.0, 0.0);
            for k in s.k_min()..=s.k_max() {
                let j = m - k;
                if j >= s.k_min() && j <= s.k_max() {
                    acc += s.coeff(k)
                        * s.coeff(j).conj()
                        * (-lb2 * ((k - j) * (k - j)) as f64 / 2.0).exp();
                }
            }
            acc.re
        })
        .collect()
}

/// `f(x)` and `f'(x)` summed term by term.
pub fn eval_pair(s: &Signal, x: f64) -> (Complex<f64>, Complex<f64>) {
    let (l, b) = (s.lambda(), s.beta());
    let mut f = Complex::new(0.0, 0.0);
    let mut df = Complex::new(0.0, 0.0);
    for k in s.k_min()..=s.k_max() {
        let t = x - b * k as f64;
        let g = (-l * t * t).exp();
        f += s.coeff(k) * g;
        df += s.coeff(k) * (-2.0 * l * t * g);
    }
    (f, df)
}

pub fn max_rel_entrywise(got: &[f64], want: &[f64]) -> f64 {
    assert_eq!(got.len(), want.len());
    got.iter()
        .zip(want)
        .map(|(g, w)| (g - w).abs() / w.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

pub fn max_rel_to_norm(got: &[f64], want: &[f64]) -> f64 {
    let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    got.iter()
        .zip(want)
        .map(|(g, w)| (g - w).abs() / scale)
        .fold(0.0, f64::max)
}

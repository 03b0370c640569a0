use gaussphase::{Result, Sample, Samples, Signal};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Smallest and largest coefficient modulus drawn by [`random_signal`].
pub const MODULUS_RANGE: (f64, f64) = (0.2, 1.0);

/// Independent stream for one `(seed, key...)` combination, stable across
/// runs and thread schedules.
pub fn trial_rng(seed: u64, key: &[u64]) -> ChaCha8Rng {
    let mut h = seed ^ 0x6A09_E667_F3BC_C908;
    for k in key {
        // splitmix64 step folded with the key
        h = h.wrapping_add(0x9E37_79B9_7F4A_7C15 ^ k.wrapping_mul(0xBF58_476D_1CE4_E5B9));
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    ChaCha8Rng::seed_from_u64(h)
}

/// Random complex coefficients with modulus in [`MODULUS_RANGE`] and
/// uniform phase on `k_min ..= k_max`.
pub fn random_signal<R: Rng>(
    rng: &mut R,
    k_min: i64,
    k_max: i64,
    lambda: f64,
    beta: f64,
) -> Result<Signal> {
    let coeffs = (k_min..=k_max)
        .map(|_| {
            let r = rng.random_range(MODULUS_RANGE.0..=MODULUS_RANGE.1);
            let t = rng.random_range(0.0..std::f64::consts::TAU);
            Complex::from_polar(r, t)
        })
        .collect();
    Signal::new(lambda, beta, k_min, coeffs)
}

/// Additive Gaussian noise on both magnitudes, clamped at zero.
pub fn add_noise<R: Rng>(rng: &mut R, samples: &Samples, sigma: f64) -> Result<Samples> {
    if sigma == 0.0 {
        return Ok(samples.clone());
    }
    let normal =
        Normal::new(0.0, sigma).map_err(|e| gaussphase::CprError::InvalidSamples(e.to_string()))?;
    let points = samples
        .points()
        .iter()
        .map(|p| Sample {
            gamma: p.gamma,
            mag_f: (p.mag_f + normal.sample(rng)).max(0.0),
            mag_df: (p.mag_df + normal.sample(rng)).max(0.0),
        })
        .collect();
    Samples::new(points)
}

//! Conjugate phase retrieval for finite-duration signals in the Gaussian
//! shift-invariant space.
//!
//! A signal `f(x) = Σ_k c_k exp(-λ(x - βk)²)` is recovered, up to a
//! unimodular factor and complex conjugation, from the magnitudes `|f(γ)|`,
//! `|f'(γ)|` at `2(K_+ - K_-) + 1` distinct points:
//!
//! 1. [`expsolve::recover_a`] solves an exponential-moment system for the
//!    autocorrelation `A` of the Gaussian-weighted coefficients;
//! 2. [`expsolve::recover_b`] does the same for the weighted sequence `B`,
//!    using `|f'|` to isolate the companion signal;
//! 3. [`recover::recover_coefficients`] runs the triangular recursion.
//!
//! [`recover::reconstruct`] chains the three steps. The numerical core is
//! generic over [`Real`] (`f32`, `f64`); the aliases below fix `f64`.

// `!(a <= b)` comparisons deliberately treat NaN as failing.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autocorr;
pub mod equiv;
pub mod error;
pub mod expsolve;
pub mod json;
pub mod linalg;
pub mod oracle;
pub mod recover;
pub mod scalar;
pub mod signal;

pub use autocorr::{
    autocorr_a, autocorr_b, autocorr_b_via_omega, half_lattice_r, tilde_coeffs, untilde_coeffs,
    AutocorrData,
};
pub use equiv::{canonicalize, equivalence_distance, normalized_distance, EquivalenceReport};
pub use error::{CprError, Result};
pub use expsolve::{recover_a, recover_b, MomentFit};
pub use recover::{
    reconstruct, recover_coefficients, sample_conditioning, verify_against_data,
    verify_signal_against_data, RecoveryOptions, RecoveryResult, Refinement, StepRecord,
};
pub use scalar::Real;
pub use signal::{default_sampling_grid, sampling_grid, GaussianSignal, HermiteSample, SampleSet};

pub type Signal = GaussianSignal<f64>;
pub type Samples = SampleSet<f64>;
pub type Sample = HermiteSample<f64>;
pub type Autocorr = AutocorrData<f64>;
pub type Recovery = RecoveryResult<f64>;
pub type Options = RecoveryOptions<f64>;
pub type Equivalence = EquivalenceReport<f64>;

pub type SignalF32 = GaussianSignal<f32>;
pub type SamplesF32 = SampleSet<f32>;

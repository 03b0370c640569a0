//! Building blocks behind the `gaussphase` binary: seeded signal synthesis,
//! the magnitude noise model and the batch experiment runner.

pub mod experiment;
pub mod synth;

pub use experiment::{run_experiment, ExperimentConfig, TrialRecord, CSV_HEADER};
pub use synth::{add_noise, random_signal, trial_rng};

//! Batch round trips: synthesize, sample, perturb, reconstruct, compare.

use std::io::Write;

use gaussphase::{
    equivalence_distance, reconstruct, sampling_grid, CprError, Options, Recovery, Result,
};
use rayon::prelude::*;

use crate::synth::{add_noise, random_signal, trial_rng};

pub const CSV_HEADER: [&str; 8] = [
    "trial",
    "N",
    "noise_sigma",
    "distance",
    "residual",
    "condition_A",
    "condition_B",
    "branch",
];

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    /// Inclusive range of `N = k_max - k_min`.
    pub n_range: (usize, usize),
    pub lambda: f64,
    pub beta: f64,
    pub noise_sigmas: Vec<f64>,
    pub oversample: f64,
    pub k_min: i64,
    pub options: Options,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CprError::InvalidSamples(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.n_range.0 > self.n_range.1 {
            return bad(format!(
                "empty N range {}..={}",
                self.n_range.0, self.n_range.1
            ));
        }
        if self
            .noise_sigmas
            .iter()
            .any(|s| !(*s >= 0.0 && s.is_finite()))
        {
            return bad("noise levels must be finite and non-negative".into());
        }
        if !(self.oversample >= 1.0 && self.oversample.is_finite()) {
            return bad(format!(
                "oversample must be at least 1, got {}",
                self.oversample
            ));
        }
        Ok(())
    }

    /// Sample count for support size `n`.
    pub fn sample_count(&self, n: usize) -> usize {
        ((2 * n + 1) as f64 * self.oversample).ceil() as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub n: usize,
    pub noise_sigma: f64,
    /// `NaN` when reconstruction failed.
    pub distance: f64,
    pub residual: f64,
    pub condition_a: f64,
    pub condition_b: f64,
    /// `a` (pivot at the first index after the leading one), `b:p` (pivot at
    /// offset `p`), `real` (no pivot), or `error:<reason>`.
    pub branch: String,
}

/// Branch label of a recovery result.
pub fn branch_label(result: &Recovery) -> String {
    match result.pivot_index {
        None => "real".into(),
        Some(k) => match k - result.signal.k_min() {
            1 => "a".into(),
            p => format!("b:{p}"),
        },
    }
}

fn error_label(e: &CprError) -> String {
    let name = format!("{e:?}");
    let end = name
        .find(|c: char| !c.is_alphanumeric())
        .unwrap_or(name.len());
    format!("error:{}", &name[..end])
}

fn run_trial(cfg: &ExperimentConfig, n: usize, noise_idx: usize, trial: usize) -> TrialRecord {
    let sigma = cfg.noise_sigmas[noise_idx];
    let mut rng = trial_rng(cfg.seed, &[n as u64, noise_idx as u64, trial as u64]);
    let (k_min, k_max) = (cfg.k_min, cfg.k_min + n as i64);
    let mut record = TrialRecord {
        trial,
        n,
        noise_sigma: sigma,
        distance: f64::NAN,
        residual: f64::NAN,
        condition_a: f64::NAN,
        condition_b: f64::NAN,
        branch: String::new(),
    };
    let outcome = (|| {
        let truth = random_signal(&mut rng, k_min, k_max, cfg.lambda, cfg.beta)?;
        let grid = sampling_grid(k_min, k_max, cfg.beta, cfg.sample_count(n));
        let samples = add_noise(&mut rng, &truth.hermite_samples(&grid)?, sigma)?;
        let result = reconstruct(&samples, k_min, k_max, cfg.lambda, cfg.beta, &cfg.options)?;
        let report = equivalence_distance(&truth, &result.signal)?;
        Ok::<_, CprError>((result, report.distance))
    })();
    match outcome {
        Ok((result, distance)) => {
            record.distance = distance;
            record.residual = result.max_residual;
            record.condition_a = result.condition_a;
            record.condition_b = result.condition_b;
            record.branch = branch_label(&result);
        }
        Err(e) => record.branch = error_label(&e),
    }
    record
}

/// Runs every `(N, noise level, trial)` combination. Trials run in
/// parallel; records come back in `(N, noise, trial)` order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize, usize)> = (cfg.n_range.0..=cfg.n_range.1)
        .flat_map(|n| {
            (0..cfg.noise_sigmas.len()).flat_map(move |s| (0..cfg.trials).map(move |t| (n, s, t)))
        })
        .collect();
    Ok(jobs
        .par_iter()
        .map(|&(n, s, t)| run_trial(cfg, n, s, t))
        .collect())
}

fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn write_csv<W: Write>(out: W, records: &[TrialRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.trial.to_string(),
            r.n.to_string(),
            num(r.noise_sigma),
            num(r.distance),
            num(r.residual),
            num(r.condition_a),
            num(r.condition_b),
            r.branch.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

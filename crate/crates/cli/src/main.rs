// `!(a <= b)` comparisons deliberately treat NaN as failing.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gaussphase::oracle::{naive_step_check, symbolic_step_check, StepCheckReport};
use gaussphase::{
    equivalence_distance, json, reconstruct, sample_conditioning, sampling_grid, CprError, Options,
    Refinement, Samples, Signal,
};
use gaussphase_cli::experiment::write_csv;
use gaussphase_cli::{add_noise, random_signal, run_experiment, trial_rng, ExperimentConfig};

/// Condition estimate above which reconstruction is reported as unreliable.
const CONDITION_WARNING: f64 = 1e12;

const EXIT_MISMATCH: u8 = 1;
const EXIT_FAILED: u8 = 2;
const EXIT_ILL_CONDITIONED: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "gaussphase",
    version,
    about = "Phase retrieval for Gaussian shift-invariant signals from Hermite magnitude samples"
)]
struct Cli {
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, global = true, default_value_t = 1.0)]
    beta: f64,
    /// First lattice index of the support window.
    #[arg(
        long,
        global = true,
        default_value_t = 0,
        allow_negative_numbers = true
    )]
    kmin: i64,
    /// Last lattice index of the support window.
    #[arg(
        long,
        global = true,
        default_value_t = 2,
        allow_negative_numbers = true
    )]
    kmax: i64,
    /// Relative threshold for treating an imaginary part as nonzero.
    #[arg(long, global = true)]
    tol_imag: Option<f64>,
    /// Sample count multiplier over the minimum 2N+1.
    #[arg(long, global = true, default_value_t = 1.0)]
    oversample: f64,
    /// Fail with exit code 3 when the condition estimate exceeds 1e12.
    #[arg(long, global = true)]
    strict: bool,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a random signal on the window --kmin..=--kmax.
    Synth,
    /// Sample |f| and |f'| of a signal.
    Sample {
        signal: PathBuf,
        /// Comma-separated sample points; default is the cell-centred grid.
        #[arg(long, allow_hyphen_values = true)]
        gammas: Option<String>,
        /// Standard deviation of additive magnitude noise.
        #[arg(long, default_value_t = 0.0)]
        noise_sigma: f64,
    },
    /// Recover a signal from a sample set on the window --kmin..=--kmax.
    Reconstruct {
        samples: PathBuf,
        #[arg(long, value_enum, default_value_t = RefineArg::Always)]
        refine: RefineArg,
        /// Report the equivalence distance to this signal on standard error.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Compare two signals modulo a unimodular factor and conjugation.
    Verify {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        threshold: f64,
    },
    /// Batch round trips, reported as CSV.
    Experiment {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        n_min: usize,
        #[arg(long, default_value_t = 6)]
        n_max: usize,
        /// Comma-separated magnitude noise levels.
        #[arg(long, default_value = "0")]
        noise: String,
        #[arg(long, value_enum, default_value_t = RefineArg::Always)]
        refine: RefineArg,
    },
    /// Check the recursion formulas against direct expansion of known signals.
    OracleCheck {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Run the uncorrected formula variants instead; these should fail.
        #[arg(long)]
        naive: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RefineArg {
    Off,
    Fallback,
    Always,
}

impl From<RefineArg> for Refinement {
    fn from(r: RefineArg) -> Self {
        match r {
            RefineArg::Off => Refinement::Off,
            RefineArg::Fallback => Refinement::Fallback,
            RefineArg::Always => Refinement::Always,
        }
    }
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<CprError> for Failure {
    fn from(e: CprError) -> Self {
        Failure::new(EXIT_FAILED, e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::new(EXIT_FAILED, e.to_string())
    }
}

type Outcome = Result<ExitCode, Failure>;

fn read_json<V: serde::de::DeserializeOwned>(path: &Path) -> Result<V, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_FAILED, format!("{}: {e}", path.display())))?;
    json::from_str(&text).map_err(|e| Failure::new(EXIT_FAILED, format!("{}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, body: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, body)
            .map_err(|e| Failure::new(EXIT_FAILED, format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(body)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn emit_json<V: serde::Serialize>(out: &Option<PathBuf>, value: &V) -> Result<(), Failure> {
    let mut body = json::to_string(value).map_err(|e| Failure::new(EXIT_FAILED, e.to_string()))?;
    body.push('\n');
    emit(out, body.as_bytes())
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Failure::new(EXIT_FAILED, format!("bad {what} value {t:?}: {e}")))
        })
        .collect()
}

fn options(cli: &Cli, refine: RefineArg) -> Options {
    let base = Options::default().with_refinement(refine.into());
    match cli.tol_imag {
        Some(t) => base.with_tol_imag(t),
        None => base,
    }
}

fn window(cli: &Cli) -> Result<(i64, i64), Failure> {
    if cli.kmax < cli.kmin {
        return Err(Failure::new(
            EXIT_FAILED,
            format!("empty window {}..={}", cli.kmin, cli.kmax),
        ));
    }
    Ok((cli.kmin, cli.kmax))
}

fn warn_condition(condition: f64) -> bool {
    let ill = !(condition <= CONDITION_WARNING);
    if ill {
        eprintln!("warning: condition estimate {condition:.3e} exceeds {CONDITION_WARNING:.0e}; recovered coefficients may be inaccurate");
    }
    ill
}

fn cmd_synth(cli: &Cli) -> Outcome {
    let (k_min, k_max) = window(cli)?;
    let signal = random_signal(
        &mut trial_rng(cli.seed, &[]),
        k_min,
        k_max,
        cli.lambda,
        cli.beta,
    )?;
    emit_json(&cli.out, &signal)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_sample(cli: &Cli, path: &Path, gammas: &Option<String>, sigma: f64) -> Outcome {
    let signal: Signal = read_json(path)?;
    let grid = match gammas {
        Some(list) => parse_list(list, "gamma")?,
        None => {
            if !(cli.oversample >= 1.0 && cli.oversample.is_finite()) {
                return Err(Failure::new(
                    EXIT_FAILED,
                    format!("oversample must be at least 1, got {}", cli.oversample),
                ));
            }
            let n = signal.span();
            let count = ((2 * n + 1) as f64 * cli.oversample).ceil() as usize;
            sampling_grid(signal.k_min(), signal.k_max(), signal.beta(), count)
        }
    };
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Failure::new(
            EXIT_FAILED,
            format!("noise sigma must be finite and non-negative, got {sigma}"),
        ));
    }
    let samples = add_noise(
        &mut trial_rng(cli.seed, &[u64::MAX]),
        &signal.hermite_samples(&grid)?,
        sigma,
    )?;
    emit_json(&cli.out, &samples)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_reconstruct(cli: &Cli, path: &Path, refine: RefineArg, truth: &Option<PathBuf>) -> Outcome {
    let (k_min, k_max) = window(cli)?;
    let samples: Samples = read_json(path)?;
    let result = match reconstruct(
        &samples,
        k_min,
        k_max,
        cli.lambda,
        cli.beta,
        &options(cli, refine),
    ) {
        Ok(r) => r,
        Err(e) => {
            let ill = sample_conditioning(&samples, k_min, k_max, cli.lambda, cli.beta)
                .is_ok_and(warn_condition);
            let code = if ill && cli.strict {
                EXIT_ILL_CONDITIONED
            } else {
                EXIT_FAILED
            };
            return Err(Failure::new(code, e.to_string()));
        }
    };
    let ill = warn_condition(result.condition_a.max(result.condition_b));
    emit_json(&cli.out, &result)?;
    if let Some(truth_path) = truth {
        let truth: Signal = read_json(truth_path)?;
        let report = equivalence_distance(&truth, &result.signal)?;
        eprintln!("distance {:.16e}", report.distance);
    }
    if ill && cli.strict {
        return Ok(ExitCode::from(EXIT_ILL_CONDITIONED));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(cli: &Cli, a: &Path, b: &Path, threshold: f64) -> Outcome {
    let f: Signal = read_json(a)?;
    let g: Signal = read_json(b)?;
    let report = equivalence_distance(&f, &g)?;
    emit_json(&cli.out, &report)?;
    Ok(if report.distance <= threshold {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_MISMATCH)
    })
}

fn cmd_experiment(
    cli: &Cli,
    trials: usize,
    n_min: usize,
    n_max: usize,
    noise: &str,
    refine: RefineArg,
) -> Outcome {
    let cfg = ExperimentConfig {
        seed: cli.seed,
        trials,
        n_range: (n_min, n_max),
        lambda: cli.lambda,
        beta: cli.beta,
        noise_sigmas: parse_list(noise, "noise")?,
        oversample: cli.oversample,
        k_min: cli.kmin,
        options: options(cli, refine),
    };
    let records = run_experiment(&cfg)?;
    let mut body = Vec::new();
    write_csv(&mut body, &records).map_err(|e| Failure::new(EXIT_FAILED, e.to_string()))?;
    emit(&cli.out, &body)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle_check(cli: &Cli, trials: usize, naive: bool) -> Outcome {
    let mut report = StepCheckReport::default();
    for k_min in [-2i64, 0, 3] {
        if naive {
            for span in 2..=4 {
                report.merge(naive_step_check(k_min, k_min + span, trials));
            }
        } else {
            for span in 1..=4 {
                report.merge(symbolic_step_check(k_min, k_min + span, trials));
            }
        }
    }
    emit_json(&cli.out, &report.failures)?;
    eprintln!(
        "{} checks, {} failures in {:?}",
        report.checks,
        report.failures.len(),
        report.failed_formulas()
    );
    // The naive variants are expected to fail; success means they did.
    Ok(if report.passed() != naive {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_MISMATCH)
    })
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Synth => cmd_synth(cli),
        Command::Sample {
            signal,
            gammas,
            noise_sigma,
        } => cmd_sample(cli, signal, gammas, *noise_sigma),
        Command::Reconstruct {
            samples,
            refine,
            truth,
        } => cmd_reconstruct(cli, samples, *refine, truth),
        Command::Verify { a, b, threshold } => cmd_verify(cli, a, b, *threshold),
        Command::Experiment {
            trials,
            n_min,
            n_max,
            noise,
            refine,
        } => cmd_experiment(cli, *trials, *n_min, *n_max, noise, *refine),
        Command::OracleCheck { trials, naive } => cmd_oracle_check(cli, *trials, *naive),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

use thiserror::Error;

/// Failure modes of the reconstruction pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CprError {
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("invalid sample set: {0}")]
    InvalidSamples(String),
    #[error("sample points are not pairwise distinct")]
    DuplicatePoints,
    #[error("exponential nodes are not pairwise distinct")]
    DuplicateNodes,
    #[error("nodes too close to resolve: relative gap {gap:e} below {threshold:e}")]
    RankDeficient { gap: f64, threshold: f64 },
    #[error("insufficient samples: {required} required for the support window, got {got}")]
    InsufficientSamples { required: usize, got: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("autocorrelation entry m={m} has imaginary residue {residue:e} (relative)")]
    NonRealAutocorrelation { m: i64, residue: f64 },
    #[error("squared modulus {value:e} is negative beyond tolerance (scale {scale:e})")]
    NegativeModulus { value: f64, scale: f64 },
    #[error(
        "leading autocorrelation coefficient {value:e} is not positive; support window wrong?"
    )]
    InvalidLeadingCoefficient { value: f64 },
    #[error("negative discriminant {value:e} at k={k} (scale {scale:e})")]
    NegativeDiscriminant { k: i64, value: f64, scale: f64 },
    #[error("data is not an autocorrelation pair on this window: residual {residual:e}")]
    InconsistentData { residual: f64 },
    #[error("signal has zero norm")]
    ZeroSignal,
}

pub type Result<T> = std::result::Result<T, CprError>;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("slow point is not on the attracting side: {0}")]
    NotAttracting(String),

    #[error("no attracting critical-manifold branch at the requested slow point")]
    NoAttractingBranch,

    #[error("matrix is not Hurwitz (spectral abscissa {0:.3e} >= -1e-12)")]
    NotHurwitz(f64),

    #[error("noise matrix must be symmetric positive semi-definite ({0})")]
    InvalidNoise(String),

    #[error("resonant frequencies: {k}*omega1 ~= {l}*omega2")]
    Resonance { k: u32, l: u32 },

    #[error("asymptotic series disordered at y={y}, eps={eps}: term {term} does not decrease")]
    SeriesDisorder { y: f64, eps: f64, term: usize },

    #[error("step {step:.3e} too large for fast rate {rate:.3e} at eps {eps:.3e}")]
    StepTooLarge { step: f64, rate: f64, eps: f64 },

    #[error("window {window} does not fit series of length {len}")]
    WindowTooLarge { window: usize, len: usize },

    #[error("root finder failed: {0}")]
    NoConvergence(String),

    #[error("quadrature did not reach the requested tolerance ({0})")]
    QuadratureFailure(String),

    #[error("fit rejected: {0}")]
    InvalidFitData(String),

    #[error("slow paths diverged across the ensemble; slow drift must not depend on x")]
    InconsistentSlowPath,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the analysis and design routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("eigenvalue iteration did not converge ({0}x{0} matrix)")]
    EigenNoConvergence(usize),

    #[error("jordan structure could not be resolved: {0}")]
    JordanStructure(String),

    #[error("subspace is not invariant (block residual {residual:.3e})")]
    NotInvariant { residual: f64 },

    #[error("transformation matrix is numerically singular")]
    SingularTransform,

    #[error("no common invariant subspace found")]
    NoDecomposition,

    #[error("characteristic determinant vanishes identically")]
    DegeneratePencil,

    #[error("characteristic interpolation residual {0:.3e} exceeds tolerance")]
    FitResidual(f64),

    #[error("elimination requires a purely commensurate characteristic function (no fixed delay offsets)")]
    FixedOffsets,

    #[error("elimination vanished identically; method inconclusive")]
    Inconclusive,

    #[error("frequency grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("point is not on a crossing (relative residual {0:.3e})")]
    NotACrossing(f64),

    #[error("degenerate crossing at omega = {omegas:?}; decompose the system first")]
    DegenerateCrossing { omegas: Vec<f64> },

    #[error("unstable-root count would become negative at tau = {tau}")]
    NegativeCount { tau: f64 },

    #[error("singular placement: {0}")]
    SingularPlacement(String),

    #[error("step dt = {dt} exceeds one tenth of the minimum delay {min_delay}")]
    StepTooLarge { dt: f64, min_delay: f64 },

    #[error("solution diverged at t = {t}")]
    Divergence { t: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

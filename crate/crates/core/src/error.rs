use crate::basis::SectorId;

/// Errors produced by the solver crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("coupling list is empty")]
    EmptyCouplings,

    #[error("coupling constant {index} is not finite")]
    NonFiniteCoupling { index: usize },

    #[error("{n} nuclei exceeds the single-word mask limit of {max}")]
    TooManyNuclei { n: usize, max: usize },

    #[error("down-set mask {mask:#b} sets bits beyond the {n} available nuclei")]
    MaskOutOfRange { mask: u64, n: usize },

    #[error("sector index m={m} outside the paired range 0..={max} for N={n}")]
    SectorOutOfRange { m: i64, n: usize, max: i64 },

    #[error("configuration {mask:#b} is not a member of the requested branch")]
    ConfigNotInBranch { mask: u64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("sector {sector:?} has dimension {dim}, over the dense cap {cap}")]
    DenseCapExceeded {
        sector: SectorId,
        dim: usize,
        cap: usize,
    },

    #[error("full-space dimension 2^{0} exceeds the brute-force cap 2^{1}", .n + 1, .max + 1)]
    FullSpaceCapExceeded { n: usize, max: usize },

    #[error("eigendecomposition failed for sector {sector:?}: {detail}")]
    EigenFailure { sector: SectorId, detail: String },

    #[error("degenerate poles (gap {gap:.3e} below {tol:.3e}); use the spectral propagator instead")]
    DegeneratePoles { gap: f64, tol: f64 },

    #[error("pole at {pole:.6e} collides with a decoupled level (gap {gap:.3e}); use the spectral propagator instead")]
    PoleCollision { pole: f64, gap: f64 },

    #[error("state has zero norm")]
    ZeroState,

    #[error("spin vector length {len:.6} exceeds the Bloch ball")]
    BlochBallBreach { len: f64 },

    #[error("norm drifted by {drift:.3e} during propagation (budget {budget:.3e})")]
    NormDrift { drift: f64, budget: f64 },

    #[error("step control failed: trace drift {drift:.3e} after {attempts} refinements")]
    StepControlFailure { drift: f64, attempts: usize },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

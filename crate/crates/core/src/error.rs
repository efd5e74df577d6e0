use crate::lp::LpError;

/// Error type shared by every module of the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dimension {0} is not supported by this operation (at most 3)")]
    DimensionTooHigh(usize),
    #[error("radius must be nonnegative and finite, got {0}")]
    NegativeRadius(f64),
    #[error("polytope is empty")]
    Infeasible,
    #[error("polytope is unbounded")]
    Unbounded,
    #[error("empty family")]
    EmptyFamily,
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("whitney construction failed: {0}")]
    Whitney(String),
    #[error("k_ell = (m+2)^ell overflows for m = {m}, ell = {ell}")]
    Overflow { m: usize, ell: u32 },
    #[error("gamma-hat {gamma_hat} too small at point {point}: core is empty for tree {tree:?}")]
    GammaHatTooSmall {
        gamma_hat: f64,
        point: usize,
        tree: Vec<(usize, usize)>,
    },
    #[error("patching hypothesis {bullet:?} violated: {detail}")]
    Patch {
        bullet: crate::patch::PatchHypothesis,
        detail: String,
    },
    #[error("selection problem is infeasible: {0}")]
    NoSelection(String),
}

pub type Result<T> = std::result::Result<T, Error>;

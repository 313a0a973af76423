use thiserror::Error;

use crate::align::AlignmentResult;

/// Errors produced by the alignment library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("shape mismatch: expected {expected}, got {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("iteration did not converge after {iterations} iterations")]
    Convergence { iterations: usize },

    #[error("matrix has no principal real logarithm: {0}")]
    NotInIdentityComponent(String),

    #[error("matrix is not an element of so(3,1): structural deviation {deviation:e} exceeds {tol:e}")]
    NotAlgebraElement { deviation: f64, tol: f64 },

    #[error("matrix is not in SO(3,1)+: eta defect {eta_defect:e}, det defect {det_defect:e}, orthochronous {orthochronous}")]
    NotLorentz {
        eta_defect: f64,
        det_defect: f64,
        orthochronous: bool,
    },

    #[error("quaternion is not unit: norm {0}")]
    NonUnitQuaternion(f64),

    #[error("rank-deficient input: effective rank {rank} < {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("solver did not converge after {} iterations (best residual {:e})", .best.iterations, .best.residual)]
    NonConvergence { best: Box<AlignmentResult> },

    #[error("empty input: {0}")]
    Empty(&'static str),
}

impl Error {
    /// Short stable tag used on machine-readable error streams.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::NonFinite(_) => "non-finite",
            Error::ShapeMismatch { .. } => "shape-mismatch",
            Error::Convergence { .. } => "convergence",
            Error::NotInIdentityComponent(_) => "not-in-identity-component",
            Error::NotAlgebraElement { .. } => "not-an-algebra-element",
            Error::NotLorentz { .. } => "not-lorentz",
            Error::NonUnitQuaternion(_) => "non-unit-quaternion",
            Error::RankDeficient { .. } => "rank-deficient",
            Error::NonConvergence { .. } => "non-convergence",
            Error::Empty(_) => "empty-input",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

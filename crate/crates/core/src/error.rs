//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("non-finite entry at ({row},{col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix entry count {found} does not match {rows}x{cols}")]
    EntryCount { rows: usize, cols: usize, found: usize },

    #[error("matrix is not Hermitian: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { residual: f64, tol: f64 },

    #[error("eigensolver did not meet its residual contract: residual {residual:.3e}, budget {budget} rotations")]
    EigenConvergence { residual: f64, budget: usize },

    #[error("spectral cut ambiguous: eigenvalue {eigenvalue:.12e} within guard of endpoint {endpoint:.12e}")]
    SpectralCutAmbiguous { eigenvalue: f64, endpoint: f64 },

    #[error("spectral window is empty or inverted: [{lo}, {hi}]")]
    InvalidWindow { lo: f64, hi: f64 },

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("matrix is not a projection: Hermitian residual {hermitian_residual:.3e}, idempotency residual {idempotency_residual:.3e} (tol {tol:.3e})")]
    NotProjection {
        hermitian_residual: f64,
        idempotency_residual: f64,
        tol: f64,
    },

    #[error("clustering tolerance {value} outside (0, 1/4)")]
    InvalidTolerance { value: f64 },

    #[error("inconsistent generic part: pairing residual {residual:.3e}")]
    InconsistentGenericPart { residual: f64 },

    #[error("subspace not contained in both ranges: residual {residual:.3e}")]
    ContainmentViolation { residual: f64 },

    #[error("pair is not in generic position: aligned block dimensions {d:?}")]
    NotGenericPosition { d: [usize; 4] },

    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("word degree {degree} exceeds cap {cap}")]
    DegreeOverflow { degree: usize, cap: usize },

    #[error("family needs at least {needed} dims, got {got}")]
    InsufficientFamily { needed: usize, got: usize },

    #[error("unknown built-in family `{name}`")]
    UnknownFamily { name: String },

    #[error("zero polynomial has no ideal projection")]
    ZeroPolynomial,

    #[error("symbol modulus {modulus:.3e} below invertibility floor at grid point {index}")]
    SymbolVanishes { index: usize, modulus: f64 },

    #[error("winding sum {value:.6} too far from an integer (residual {residual:.3}); refine the grid")]
    WindingResidual { value: f64, residual: f64 },

    #[error("projection family is not essentially normal at desk scale: {detail}")]
    NotEssentiallyNormal { detail: String },

    #[error("{message}")]
    Invalid { message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(message: impl Into<String>) -> Self {
        Error::Invalid {
            message: message.into(),
        }
    }
}

//! Centralized tolerance configuration.
//!
//! Every residual threshold the library applies lives in one record so that
//! downstream reports can echo the exact values in force. Thresholds marked
//! "relative" are multiplied by a scale derived from the operand (usually
//! `dim * max-norm` or the spectral norm) at the point of use.

use serde::Serialize;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    /// Hermitian-input slack for the eigensolver, relative to the max-norm.
    pub hermitian: f64,
    /// Eigensystem residual and orthogonality budget, relative to `dim * max-norm`.
    pub eigen: f64,
    /// Projection validation threshold (absolute residual on `A - A*` and `A^2 - A`).
    pub projection: f64,
    /// Spectral-cut ambiguity guard, relative to the spectral norm.
    pub spectral_cut: f64,
    /// Eigenvalue clustering threshold for the canonical decomposition.
    pub cluster: f64,
    /// PSD slack for matrix square roots, relative to the spectral norm.
    pub psd: f64,
    /// Eigenvalues of a positive operator below this are treated as its zero cluster.
    pub zero_cluster: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        hermitian: 1e-10,
        eigen: 1e-10,
        projection: 1e-9,
        spectral_cut: 1e-12,
        cluster: 1e-8,
        psd: 1e-10,
        zero_cluster: 1e-9,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances::DEFAULT
    }
}

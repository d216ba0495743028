//! Numerical laboratory for pairs of orthogonal projections.
//!
//! The building blocks: a dense Hermitian spectral kernel, the canonical form
//! of a projection pair, meet/join constructions with spectral certificates,
//! the two-projection symbol calculus, truncation families standing in for
//! operators on infinite-dimensional space, and locality experiments
//! (discretized function models, local supports, winding-number invariants).

pub mod bergman;
pub mod cmatrix;
pub mod config;
pub mod dixmier;
pub mod error;
pub mod fixtures;
pub mod halmos;
pub mod lattice;
pub mod locality;
pub mod spectral;
pub mod truncation;

pub use cmatrix::CMatrix;
pub use config::Tolerances;
pub use error::{Error, Result};
pub use halmos::{HalmosForm, PrincipalAngles, ProjectionPair};
pub use spectral::EigenSystem;

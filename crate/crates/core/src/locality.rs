//! Locality of essentially normal projections at desk scale.
//!
//! A discretized function model maps sampled functions on a space `M` to a
//! nested operator family. Local supports are estimated by probing a
//! projection family with a dictionary of bump functions; disjoint supports
//! force compact-like products. On circle-supported models the odd K-theory
//! datum is realized as the winding number of the compressed symbol: square
//! truncations force equal kernel and cokernel counts and destroy any index,
//! so the winding of an invertible symbol is the honest finite-data
//! surrogate, and it is stable under finite-rank perturbations.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::cmatrix::CMatrix;
use crate::error::{Error, Result};
use crate::halmos::{decompose, ProjectionPair};
use crate::spectral::{hermitian_eig, operator_norm, operator_norm_estimate, singular_values};
use crate::truncation::{
    compactness_indicator, CompactnessConfig, CompactnessProfile, Embedding, TruncFamily,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpaceId {
    Circle,
    Interval,
    ClosedDiskBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModelKind {
    DiagonalMultiplication,
    TruncatedToeplitz,
    BergmanToeplitzDisk,
}

/// A discretized *-homomorphism from sampled functions on `M` to matrices.
///
/// * diagonal multiplication on `[0, 1]`: basis index `j` carries the grid
///   point `j mod G`; exactly multiplicative.
/// * truncated Toeplitz on the circle: Fourier coefficients of the sampled
///   symbol fill the diagonals; multiplicative up to a compact-like defect.
/// * disk model on the circle: the same coefficients damped by
///   `sqrt((min+1)/(max+1))`, the matrix of a boundary multiplier against the
///   normalized monomial basis.
#[derive(Debug, Clone)]
pub struct SigmaModel {
    kind: ModelKind,
    space: SpaceId,
    grid: Vec<f64>,
}

impl SigmaModel {
    pub fn diagonal(grid_size: usize) -> SigmaModel {
        SigmaModel {
            kind: ModelKind::DiagonalMultiplication,
            space: SpaceId::Interval,
            grid: (0..grid_size)
                .map(|j| (j as f64 + 0.5) / grid_size as f64)
                .collect(),
        }
    }

    pub fn toeplitz(grid_size: usize) -> SigmaModel {
        SigmaModel {
            kind: ModelKind::TruncatedToeplitz,
            space: SpaceId::Circle,
            grid: circle_grid(grid_size),
        }
    }

    pub fn bergman(grid_size: usize) -> SigmaModel {
        SigmaModel {
            kind: ModelKind::BergmanToeplitzDisk,
            space: SpaceId::ClosedDiskBoundary,
            grid: circle_grid(grid_size),
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn space(&self) -> SpaceId {
        self.space
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn grid_size(&self) -> usize {
        self.grid.len()
    }

    fn wraps(&self) -> bool {
        self.space != SpaceId::Interval
    }

    /// Realizes `sigma(phi)` at matrix dimension `n`; `phi` is sampled on the
    /// grid. Entries depend only on the index pair, so families built from
    /// this map are nested.
    pub fn apply(&self, phi: &[Complex64], n: usize) -> Result<CMatrix> {
        if phi.len() != self.grid.len() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "sampled function has {} values, grid has {}",
                    phi.len(),
                    self.grid.len()
                ),
            });
        }
        match self.kind {
            ModelKind::DiagonalMultiplication => {
                let g = self.grid.len();
                Ok(CMatrix::from_fn(n, n, |i, j| {
                    if i == j {
                        phi[i % g]
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                }))
            }
            ModelKind::TruncatedToeplitz => {
                let coeff = self.fourier_coefficients(phi);
                Ok(CMatrix::from_fn(n, n, |a, b| {
                    coeff_at(&coeff, a as i64 - b as i64, self.grid.len())
                }))
            }
            ModelKind::BergmanToeplitzDisk => {
                let coeff = self.fourier_coefficients(phi);
                Ok(CMatrix::from_fn(n, n, |a, b| {
                    let damp =
                        (((a.min(b) + 1) as f64) / ((a.max(b) + 1) as f64)).sqrt();
                    coeff_at(&coeff, a as i64 - b as i64, self.grid.len()) * damp
                }))
            }
        }
    }

    /// Centered DFT coefficients `m = -floor((G-1)/2) ..= floor(G/2)`, stored
    /// offset by `floor((G-1)/2)`.
    fn fourier_coefficients(&self, phi: &[Complex64]) -> Vec<Complex64> {
        let g = self.grid.len();
        let lo = -((g as i64 - 1) / 2);
        let hi = g as i64 / 2;
        (lo..=hi)
            .map(|m| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, &value) in phi.iter().enumerate() {
                    let angle = -(m as f64) * TAU * (j as f64) / (g as f64);
                    acc += value * Complex64::from_polar(1.0, angle);
                }
                acc / g as f64
            })
            .collect()
    }

    /// Piecewise-linear hat of height 1 and total width 4 grid cells centered
    /// at `center` (wrapping on circular spaces).
    pub fn bump(&self, center: usize) -> Vec<Complex64> {
        let g = self.grid.len();
        (0..g)
            .map(|j| {
                let raw = (j as f64 - center as f64).abs();
                let dist = if self.wraps() {
                    raw.min(g as f64 - raw)
                } else {
                    raw
                };
                Complex64::new((1.0 - dist / 2.0).max(0.0), 0.0)
            })
            .collect()
    }

    /// `|sigma(phi psi) - sigma(phi) sigma(psi)|` at dimension `n`.
    pub fn multiplicativity_defect(
        &self,
        phi: &[Complex64],
        psi: &[Complex64],
        n: usize,
    ) -> Result<f64> {
        let product: Vec<Complex64> = phi.iter().zip(psi).map(|(a, b)| a * b).collect();
        let lhs = self.apply(&product, n)?;
        let rhs = &self.apply(phi, n)? * &self.apply(psi, n)?;
        operator_norm(&(&lhs - &rhs))
    }

    /// Family `n -> sigma(phi)_n`.
    pub fn family(
        self: &Arc<Self>,
        name: impl Into<String>,
        phi: Vec<Complex64>,
        dims: Vec<usize>,
    ) -> Result<TruncFamily> {
        let model = self.clone();
        TruncFamily::new(name, dims, Embedding::LeadingPrincipal, move |n| {
            model.apply(&phi, n).expect("sample length fixed")
        })
    }
}

fn circle_grid(grid_size: usize) -> Vec<f64> {
    (0..grid_size)
        .map(|j| TAU * j as f64 / grid_size as f64)
        .collect()
}

fn coeff_at(coeff: &[Complex64], m: i64, g: usize) -> Complex64 {
    let lo = -((g as i64 - 1) / 2);
    let hi = g as i64 / 2;
    if m < lo || m > hi {
        Complex64::new(0.0, 0.0)
    } else {
        coeff[(m - lo) as usize]
    }
}

/// Diagonal projection family picking the coordinates whose grid point
/// satisfies `pred` (indices taken mod the grid size).
pub fn coordinate_family(
    model: &Arc<SigmaModel>,
    name: impl Into<String>,
    dims: Vec<usize>,
    pred: impl Fn(usize) -> bool + Send + Sync + 'static,
) -> Result<TruncFamily> {
    let g = model.grid_size();
    TruncFamily::new(name, dims, Embedding::LeadingPrincipal, move |n| {
        CMatrix::from_fn(n, n, |i, j| {
            if i == j && pred(i % g) {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalityConfig {
    /// Witness threshold on `|P sigma(bump_x) P|`.
    pub support_tol: f64,
    /// Every `stride`-th bump feeds the essential-normality precheck.
    pub dictionary_stride: usize,
    /// Commutator norms may grow by this factor between the two largest dims
    /// before the family is flagged as not essentially normal.
    pub normality_slack: f64,
}

impl Default for LocalityConfig {
    fn default() -> Self {
        LocalityConfig {
            support_tol: 1e-3,
            dictionary_stride: 16,
            normality_slack: 1.1,
        }
    }
}

/// Estimated local support of a projection family.
#[derive(Debug, Clone, Serialize)]
pub struct LocalSupport {
    pub grid: Vec<f64>,
    /// Indices of flagged grid points.
    pub flagged: Vec<usize>,
    /// Witness norms `|P sigma(bump_x) P|` at the two largest dims, per grid
    /// point.
    pub witnesses: Vec<[f64; 2]>,
    /// Set when the essential-normality precheck failed.
    pub warning: Option<String>,
}

impl LocalSupport {
    pub fn covers_full_grid(&self) -> bool {
        self.flagged.len() == self.grid.len()
    }

    /// Fraction of the grid flagged (arc measure for circular spaces).
    pub fn flagged_measure(&self) -> f64 {
        self.flagged.len() as f64 / self.grid.len() as f64
    }
}

/// Estimates the local support: grid point `x` is flagged iff the witness
/// norm `|P sigma(bump_x) P|` clears `tol` at the two largest dims.
pub fn local_support(
    family: &TruncFamily,
    model: &SigmaModel,
    params: &[usize],
    tol: f64,
    strict: bool,
) -> Result<LocalSupport> {
    if params.len() < 2 {
        return Err(Error::InsufficientFamily {
            needed: 2,
            got: params.len(),
        });
    }
    let mut sorted = params.to_vec();
    sorted.sort_unstable();
    let top = [sorted[sorted.len() - 2], sorted[sorted.len() - 1]];
    let config = LocalityConfig {
        support_tol: tol,
        ..LocalityConfig::default()
    };

    // Essential-normality precheck over a strided dictionary.
    let mut warning = None;
    let stride = (model.grid_size() / config.dictionary_stride).max(1);
    for center in (0..model.grid_size()).step_by(stride) {
        let bump = model.bump(center);
        let mut defects = [0.0f64; 2];
        for (slot, &n) in top.iter().enumerate() {
            let p = family.realize(n);
            let sigma = model.apply(&bump, p.rows())?;
            let comm = &(&sigma * &*p) - &(&*p * &sigma);
            defects[slot] = operator_norm_estimate(&comm, 1e-9);
        }
        if defects[1] > defects[0] * config.normality_slack + 1e-9 {
            let detail = format!(
                "commutator with bump at grid index {center} grows: {:.3e} -> {:.3e}",
                defects[0], defects[1]
            );
            if strict {
                return Err(Error::NotEssentiallyNormal { detail });
            }
            warning.get_or_insert(detail);
        }
    }

    let mut flagged = Vec::new();
    let mut witnesses = Vec::with_capacity(model.grid_size());
    for center in 0..model.grid_size() {
        let bump = model.bump(center);
        let mut w = [0.0f64; 2];
        for (slot, &n) in top.iter().enumerate() {
            let p = family.realize(n);
            let sigma = model.apply(&bump, p.rows())?;
            let compressed = &(&*p * &sigma) * &*p;
            w[slot] = operator_norm_estimate(&compressed, 1e-9);
        }
        if w[0] >= tol && w[1] >= tol {
            flagged.push(center);
        }
        witnesses.push(w);
    }
    Ok(LocalSupport {
        grid: model.grid().to_vec(),
        flagged,
        witnesses,
        warning,
    })
}

#[derive(Debug, Clone, Serialize)]
pub enum DisjointSupportStatus {
    /// Supports disjoint; the product family's compactness verdict follows.
    HypothesisMet,
    /// Supports overlap at the listed grid indices.
    HypothesisNotMet { shared: Vec<usize> },
}

#[derive(Debug, Clone, Serialize)]
pub struct DisjointSupportReport {
    pub support_p: LocalSupport,
    pub support_q: LocalSupport,
    pub status: DisjointSupportStatus,
    /// Compactness profile of `n -> P_n Q_n` when the hypothesis is met and
    /// at least four dims are available.
    pub product_profile: Option<CompactnessProfile>,
    /// Singular values of the product above 1e-9 at the largest dim.
    pub product_rank_top: usize,
}

/// Tests the disjoint-support implication: estimated supports with no shared
/// grid point must yield a compact-like product family.
pub fn disjoint_support_check(
    p_family: &Arc<TruncFamily>,
    q_family: &Arc<TruncFamily>,
    model: &SigmaModel,
    params: &[usize],
    tol: f64,
) -> Result<DisjointSupportReport> {
    let support_p = local_support(p_family, model, params, tol, false)?;
    let support_q = local_support(q_family, model, params, tol, false)?;
    let shared: Vec<usize> = support_p
        .flagged
        .iter()
        .copied()
        .filter(|i| support_q.flagged.contains(i))
        .collect();
    let top = *params.iter().max().unwrap();
    let product_top = {
        let p = p_family.realize(top);
        let q = q_family.realize(top);
        &*p * &*q
    };
    let product_rank_top = singular_values(&product_top)?
        .iter()
        .filter(|&&s| s > 1e-9)
        .count();
    if shared.is_empty() {
        let p = p_family.clone();
        let q = q_family.clone();
        let product = TruncFamily::new(
            "product",
            p_family.dims().to_vec(),
            Embedding::GrowingBasis,
            move |n| &*p.realize(n) * &*q.realize(n),
        )?;
        let product_profile = if params.len() >= 4 {
            Some(compactness_indicator(
                &product,
                params,
                &CompactnessConfig::default(),
            )?)
        } else {
            None
        };
        Ok(DisjointSupportReport {
            support_p,
            support_q,
            status: DisjointSupportStatus::HypothesisMet,
            product_profile,
            product_rank_top,
        })
    } else {
        Ok(DisjointSupportReport {
            support_p,
            support_q,
            status: DisjointSupportStatus::HypothesisNotMet { shared },
            product_profile: None,
            product_rank_top,
        })
    }
}

/// Winding number of a nowhere-vanishing loop sampled in order around the
/// circle: the unwrapped phase increment over `2 pi`, rounded to the nearest
/// integer. Rounding residuals above 0.1 mean the grid is too coarse.
pub fn winding_index(samples: &[Complex64]) -> Result<i64> {
    if samples.len() < 8 {
        return Err(Error::invalid(format!(
            "winding needs at least 8 samples, got {}",
            samples.len()
        )));
    }
    for (index, z) in samples.iter().enumerate() {
        let modulus = z.norm();
        if !modulus.is_finite() || modulus < 1e-6 {
            return Err(Error::SymbolVanishes { index, modulus });
        }
    }
    let mut total = 0.0f64;
    let step_cap = 0.9 * PI;
    for k in 0..samples.len() {
        let next = samples[(k + 1) % samples.len()];
        let step = (next / samples[k]).arg();
        if step.abs() > step_cap {
            return Err(Error::invalid(format!(
                "phase step {step:.3} between samples {k} and {} is too close to pi;                  the grid is too coarse to track the symbol",
                (k + 1) % samples.len()
            )));
        }
        total += step;
    }
    let value = total / TAU;
    let rounded = value.round();
    let residual = (value - rounded).abs();
    if residual > 0.1 {
        return Err(Error::WindingResidual { value, residual });
    }
    Ok(rounded as i64)
}

#[derive(Debug, Clone, Serialize)]
pub struct K1Report {
    pub supports_equal: bool,
    pub index_p: i64,
    pub index_q: i64,
    /// Aligned intersection dimensions `ran P ∩ ker Q` and `ker P ∩ ran Q`
    /// at the largest dim; the equality theorem assumes both vanish.
    pub d0: usize,
    pub d2: usize,
    pub support_p: LocalSupport,
    pub support_q: LocalSupport,
}

pub struct K1Check<'a> {
    pub model: &'a Arc<SigmaModel>,
    pub p_family: &'a Arc<TruncFamily>,
    /// Invertible symbol sampled on the model grid.
    pub symbol: &'a [Complex64],
    /// Hermitian generator of the finite-rank unitary `exp(iK)`.
    pub perturbation: &'a CMatrix,
    pub params: &'a [usize],
    pub support_tol: f64,
}

/// Conjugates the projection family by the finite-rank unitary `exp(iK)` and
/// checks that local supports and winding indices agree between the original
/// and the conjugated family.
pub fn k1_invariance_check(check: &K1Check) -> Result<K1Report> {
    let r = check.perturbation.rows();
    if check.params.iter().any(|&n| {
        let dim = check.p_family.realize(n).rows();
        dim < r
    }) {
        return Err(Error::invalid(
            "perturbation must fit inside the smallest realization",
        ));
    }
    let u0 = unitary_exponential(check.perturbation)?;
    let p = check.p_family.clone();
    let q_family = Arc::new(p.map("conjugated", Embedding::LeadingPrincipal, move |m| {
        let u = u0.embed_in_identity(m.rows());
        &(&u * m) * &u.adjoint()
    })?);

    let support_p = local_support(
        check.p_family,
        check.model,
        check.params,
        check.support_tol,
        false,
    )?;
    let support_q = local_support(
        &q_family,
        check.model,
        check.params,
        check.support_tol,
        false,
    )?;
    let supports_equal = support_p.flagged == support_q.flagged;

    let top = *check.params.iter().max().unwrap();
    let pair = ProjectionPair::new(
        (*check.p_family.realize(top)).clone(),
        (*q_family.realize(top)).clone(),
    )?;
    let form = decompose(&pair, crate::config::Tolerances::DEFAULT.cluster)?;

    let index_p = compressed_symbol_index(check.model, check.p_family, check.symbol, top, &support_p)?;
    let index_q = compressed_symbol_index(check.model, &q_family, check.symbol, top, &support_q)?;

    Ok(K1Report {
        supports_equal,
        index_p,
        index_q,
        d0: form.d[0],
        d2: form.d[2],
        support_p,
        support_q,
    })
}

/// `exp(iK)` for Hermitian `K` by functional calculus.
fn unitary_exponential(k: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eig(&k.hermitian_part())?;
    let dim = k.rows();
    let mut out = CMatrix::zeros(dim, dim);
    for (idx, &lambda) in eig.values.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, lambda);
        for i in 0..dim {
            let vi = eig.vectors[(i, idx)] * phase;
            for j in 0..dim {
                let add = vi * eig.vectors[(j, idx)].conj();
                out[(i, j)] += add;
            }
        }
    }
    Ok(out)
}

/// Winding of the trace-compressed symbol `x -> tr(P sigma(bump_x phi) P) /
/// tr(P sigma(bump_x) P)` over the grid. Defined (nonzero-able) only when the
/// support covers the full circle; proper arcs and intervals carry no loop,
/// so the index is 0 there.
fn compressed_symbol_index(
    model: &SigmaModel,
    family: &TruncFamily,
    symbol: &[Complex64],
    top: usize,
    support: &LocalSupport,
) -> Result<i64> {
    if model.space() == SpaceId::Interval || !support.covers_full_grid() {
        return Ok(0);
    }
    let p = family.realize(top);
    let n = p.rows();
    let mut samples = Vec::with_capacity(model.grid_size());
    for center in 0..model.grid_size() {
        let bump = model.bump(center);
        let weighted: Vec<Complex64> = bump.iter().zip(symbol).map(|(b, s)| b * s).collect();
        let num = trace_product(&model.apply(&weighted, n)?, &p);
        let den = trace_product(&model.apply(&bump, n)?, &p);
        if den.norm() < 1e-12 {
            return Err(Error::invalid(format!(
                "compressed symbol undefined at grid index {center}: empty local mass",
            )));
        }
        samples.push(num / den);
    }
    winding_index(&samples)
}

/// `tr(A B)` without forming the product.
fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    debug_assert_eq!(a.cols(), b.rows());
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.rows() {
        for k in 0..a.cols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_samples(f: impl Fn(f64) -> Complex64, n: usize) -> Vec<Complex64> {
        (0..n).map(|j| f(TAU * j as f64 / n as f64)).collect()
    }

    #[test]
    fn diagonal_model_is_exactly_multiplicative() {
        let model = SigmaModel::diagonal(16);
        let phi: Vec<Complex64> = (0..16).map(|j| Complex64::new(j as f64, 1.0)).collect();
        let psi: Vec<Complex64> = (0..16).map(|j| Complex64::new(1.0, -(j as f64))).collect();
        let defect = model.multiplicativity_defect(&phi, &psi, 24).unwrap();
        assert_eq!(defect, 0.0);
    }

    #[test]
    fn toeplitz_model_of_z_is_the_shift() {
        let model = SigmaModel::toeplitz(32);
        let z = circle_samples(|t| Complex64::from_polar(1.0, t), 32);
        let m = model.apply(&z, 8).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let want = if i == j + 1 { 1.0 } else { 0.0 };
                assert!(
                    (m[(i, j)] - Complex64::new(want, 0.0)).norm() < 1e-12,
                    "entry ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn toeplitz_defect_non_increasing_beyond_32() {
        let model = SigmaModel::toeplitz(64);
        let phi = circle_samples(|t| Complex64::from_polar(1.0, t), 64);
        let psi = circle_samples(|t| Complex64::from_polar(1.0, -t), 64);
        let mut last = f64::INFINITY;
        for n in [32, 40, 48, 56] {
            let defect = model.multiplicativity_defect(&phi, &psi, n).unwrap();
            assert!(defect <= last + 1e-12, "defect grew at n={n}");
            last = defect;
        }
    }

    #[test]
    fn bergman_model_of_z_matches_weighted_shift() {
        let model = SigmaModel::bergman(64);
        let z = circle_samples(|t| Complex64::from_polar(1.0, t), 64);
        let m = model.apply(&z, 6).unwrap();
        let want = crate::bergman::toeplitz_z(5);
        assert!(m.max_diff(&want) < 1e-12);
    }

    #[test]
    fn sigma_families_are_nested() {
        let model = Arc::new(SigmaModel::toeplitz(32));
        let phi = circle_samples(|t| Complex64::from_polar(1.0, t) + 2.0, 32);
        let fam = model.family("sym", phi, vec![4, 8, 12, 16]).unwrap();
        fam.verify_nested(&[4, 8, 12, 16]).unwrap();
    }

    #[test]
    fn local_support_left_half_diagonal() {
        let model = Arc::new(SigmaModel::diagonal(32));
        let fam = Arc::new(
            coordinate_family(&model, "left", vec![32, 64], |j| j < 16).unwrap(),
        );
        let support = local_support(&fam, &model, &[32, 64], 1e-3, true).unwrap();
        // Flagged points sit in the left half, within one bump width.
        assert!(!support.flagged.is_empty());
        for &idx in &support.flagged {
            assert!(model.grid()[idx] < 0.5 + 2.5 / 32.0, "stray point {idx}");
        }
        // Left-half interior is fully flagged.
        for idx in 2..14 {
            assert!(support.flagged.contains(&idx), "missing interior {idx}");
        }
    }

    #[test]
    fn local_support_of_zero_family_is_empty() {
        let model = Arc::new(SigmaModel::diagonal(16));
        let fam = coordinate_family(&model, "none", vec![16, 32], |_| false).unwrap();
        let support = local_support(&fam, &model, &[16, 32], 1e-3, true).unwrap();
        assert!(support.flagged.is_empty());
    }

    #[test]
    fn disjoint_halves_have_zero_product() {
        let model = Arc::new(SigmaModel::diagonal(32));
        let left = Arc::new(coordinate_family(&model, "left", vec![32, 64, 96, 128], |j| j < 14).unwrap());
        let right = Arc::new(
            coordinate_family(&model, "right", vec![32, 64, 96, 128], |j| j >= 18).unwrap(),
        );
        let report =
            disjoint_support_check(&left, &right, &model, &[32, 64, 96, 128], 1e-3).unwrap();
        assert!(matches!(report.status, DisjointSupportStatus::HypothesisMet));
        assert_eq!(report.product_rank_top, 0);
        let profile = report.product_profile.unwrap();
        assert_eq!(
            profile.verdict,
            crate::truncation::DecayVerdict::CompactLike
        );
    }

    #[test]
    fn shared_coordinate_defeats_hypothesis() {
        let model = Arc::new(SigmaModel::diagonal(32));
        let left = Arc::new(coordinate_family(&model, "left", vec![24, 32], |j| j < 16).unwrap());
        let right = Arc::new(
            coordinate_family(&model, "right", vec![24, 32], |j| j >= 15).unwrap(),
        );
        let report = disjoint_support_check(&left, &right, &model, &[24, 32], 1e-3).unwrap();
        match report.status {
            DisjointSupportStatus::HypothesisNotMet { shared } => assert!(!shared.is_empty()),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(report.product_rank_top, 1);
    }

    #[test]
    fn winding_of_powers() {
        for k in -5i64..=5 {
            let samples = circle_samples(|t| Complex64::from_polar(1.0, k as f64 * t), 1024);
            assert_eq!(winding_index(&samples).unwrap(), k, "k={k}");
        }
    }

    #[test]
    fn winding_of_constant_is_zero() {
        let samples = vec![Complex64::new(1.0, 0.0); 64];
        assert_eq!(winding_index(&samples).unwrap(), 0);
    }

    #[test]
    fn winding_counts_roots_inside_only() {
        // (z - 0.5)(z - 2): one root inside the circle, one outside.
        let f = |t: f64| {
            let z = Complex64::from_polar(1.0, t);
            (z - 0.5) * (z - 2.0)
        };
        let samples = circle_samples(f, 1024);
        assert_eq!(winding_index(&samples).unwrap(), 1);
        // Normalizing by the modulus changes nothing.
        let normalized: Vec<Complex64> = samples.iter().map(|z| z / z.norm()).collect();
        assert_eq!(winding_index(&normalized).unwrap(), 1);
    }

    #[test]
    fn winding_matches_argument_principle_quadrature() {
        // Oracle: the contour integral of f'/f via dense trapezoid sampling.
        let f = |z: Complex64| (z - 0.5) * (z - 2.0) * (z + Complex64::new(0.0, 0.3));
        let fp = |z: Complex64| {
            (z - 2.0) * (z + Complex64::new(0.0, 0.3))
                + (z - 0.5) * (z + Complex64::new(0.0, 0.3))
                + (z - 0.5) * (z - 2.0)
        };
        let n = 8192;
        let mut integral = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let t = TAU * j as f64 / n as f64;
            let z = Complex64::from_polar(1.0, t);
            let dz = Complex64::new(0.0, 1.0) * z * (TAU / n as f64);
            integral += fp(z) / f(z) * dz;
        }
        let oracle = (integral / Complex64::new(0.0, TAU)).re.round() as i64;
        let samples = circle_samples(|t| f(Complex64::from_polar(1.0, t)), 1024);
        assert_eq!(winding_index(&samples).unwrap(), oracle);
        assert_eq!(oracle, 2);
    }

    #[test]
    fn winding_rejects_vanishing_symbol() {
        let samples = circle_samples(|t| Complex64::from_polar(1.0, t) - 1.0, 64);
        assert!(matches!(
            winding_index(&samples),
            Err(Error::SymbolVanishes { .. })
        ));
    }

    #[test]
    fn winding_rejects_coarse_grid() {
        // z^4 at 8 points steps by exactly pi per sample: genuinely
        // ambiguous, every increment sits on the branch boundary.
        let samples = circle_samples(|t| Complex64::from_polar(1.0, 4.0 * t), 8);
        assert!(winding_index(&samples).is_err());
    }

    #[test]
    fn grid_refinement_and_positive_scaling_invariance() {
        let base = |t: f64| Complex64::from_polar(1.0, 2.0 * t) * (2.0 + t.sin());
        for n in [256usize, 512, 1024] {
            let samples = circle_samples(base, n);
            assert_eq!(winding_index(&samples).unwrap(), 2);
        }
    }

    #[test]
    fn k1_zero_perturbation_identical() {
        let model = Arc::new(SigmaModel::toeplitz(32));
        let fam = Arc::new(
            coordinate_family(&model, "tail", vec![24, 32, 48], |_| true).unwrap(),
        );
        let z = circle_samples(|t| Complex64::from_polar(1.0, t), 32);
        let k = CMatrix::zeros(4, 4);
        let report = k1_invariance_check(&K1Check {
            model: &model,
            p_family: &fam,
            symbol: &z,
            perturbation: &k,
            params: &[24, 32, 48],
            support_tol: 1e-3,
        })
        .unwrap();
        assert!(report.supports_equal);
        assert_eq!(report.index_p, report.index_q);
        assert_eq!(report.index_p, 1);
    }

    #[test]
    fn k1_rank_one_diagonal_model() {
        let model = Arc::new(SigmaModel::diagonal(16));
        let fam = Arc::new(
            coordinate_family(&model, "left", vec![16, 32, 48], |j| j < 8).unwrap(),
        );
        let phi: Vec<Complex64> = (0..16).map(|_| Complex64::new(1.0, 0.0)).collect();
        let mut k = CMatrix::zeros(3, 3);
        k[(0, 0)] = Complex64::new(0.7, 0.0);
        let report = k1_invariance_check(&K1Check {
            model: &model,
            p_family: &fam,
            symbol: &phi,
            perturbation: &k,
            params: &[16, 32, 48],
            support_tol: 1e-3,
        })
        .unwrap();
        assert!(report.supports_equal);
        // Interval space: both indices are trivially zero.
        assert_eq!(report.index_p, 0);
        assert_eq!(report.index_q, 0);
    }

    #[test]
    fn k1_rank_three_toeplitz_model() {
        let model = Arc::new(SigmaModel::toeplitz(32));
        // Essentially the identity: drop the first three coordinates.
        let fam = Arc::new(
            TruncFamily::new("drop3", vec![24, 32, 48], Embedding::LeadingPrincipal, |n| {
                CMatrix::from_fn(n, n, |i, j| {
                    if i == j && i >= 3 {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
            })
            .unwrap(),
        );
        let z = circle_samples(|t| Complex64::from_polar(1.0, t), 32);
        // Rank-3 Hermitian generator straddling the dropped block.
        let mut k = CMatrix::zeros(5, 5);
        k[(0, 0)] = Complex64::new(0.5, 0.0);
        k[(1, 3)] = Complex64::new(0.3, 0.0);
        k[(3, 1)] = Complex64::new(0.3, 0.0);
        let report = k1_invariance_check(&K1Check {
            model: &model,
            p_family: &fam,
            symbol: &z,
            perturbation: &k,
            params: &[24, 32, 48],
            support_tol: 1e-3,
        })
        .unwrap();
        assert!(report.supports_equal);
        assert_eq!(report.index_p, 1);
        assert_eq!(report.index_q, 1);
    }
}

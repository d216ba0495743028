//! Dense Hermitian spectral kernel.
//!
//! Eigendecomposition, spectral projections, PSD square roots and projection
//! validation. The eigensolver is a contract, not an algorithm: any method
//! that meets the residual and orthogonality budgets is conforming. The
//! implementation is a threshold cyclic Jacobi scheme: deterministic sweep
//! order, rotations skipped below an absolute threshold (so structured
//! matrices converge in a handful of sweeps), eigenvalues sorted ascending
//! with a stable sort so near-ties keep the sweep's order between runs.

use num_complex::Complex64;

use crate::cmatrix::CMatrix;
use crate::config::Tolerances;
use crate::error::{Error, Result};

/// Rotation budget for the eigensolver: `64 * dim^2`.
fn iteration_budget(dim: usize) -> usize {
    64 * dim * dim
}

/// One cyclic-Jacobi diagonalization pass over a Hermitian matrix held in
/// flat row-major storage. Returns the rotation count or `None` when the
/// budget ran out before the off-diagonal dropped under the threshold.
fn jacobi_diagonalize(
    a: &mut [Complex64],
    v: &mut [Complex64],
    n: usize,
    budget: usize,
) -> Option<usize> {
    let scale = a
        .iter()
        .map(|z| z.norm())
        .fold(0.0f64, f64::max);
    if scale == 0.0 {
        return Some(0);
    }
    // Off-diagonal entries below this are left in place; the induced
    // eigenvalue error is at most n * threshold, far inside the contract.
    let threshold = f64::EPSILON * scale;
    let mut rotations = 0usize;
    loop {
        let mut rotated_this_sweep = 0usize;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let r = apq.norm();
                if r <= threshold {
                    continue;
                }
                if rotations >= budget {
                    return None;
                }
                rotations += 1;
                rotated_this_sweep += 1;
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let phase = apq / r;
                let phase_c = phase.conj();
                // Row action by U*: rows p and q.
                for k in 0..n {
                    let ap = a[p * n + k];
                    let aq = a[q * n + k];
                    a[p * n + k] = ap * c - aq * (phase * s);
                    a[q * n + k] = ap * s + aq * (phase * c);
                }
                // Column action by U: columns p and q.
                for k in 0..n {
                    let ap = a[k * n + p];
                    let aq = a[k * n + q];
                    a[k * n + p] = ap * c - aq * (phase_c * s);
                    a[k * n + q] = ap * s + aq * (phase_c * c);
                }
                // Eigenvector accumulation: V <- V U.
                for k in 0..n {
                    let vp = v[k * n + p];
                    let vq = v[k * n + q];
                    v[k * n + p] = vp * c - vq * (phase_c * s);
                    v[k * n + q] = vp * s + vq * (phase_c * c);
                }
                // Pin the algebraically exact zeros and real diagonal.
                a[p * n + q] = Complex64::new(0.0, 0.0);
                a[q * n + p] = Complex64::new(0.0, 0.0);
                a[p * n + p] = Complex64::new(app - t * r, 0.0);
                a[q * n + q] = Complex64::new(aqq + t * r, 0.0);
            }
        }
        if rotated_this_sweep == 0 {
            return Some(rotations);
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenSystem {
    /// Eigenvalues, ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, aligned with `values`.
    pub vectors: CMatrix,
}

impl EigenSystem {
    /// Spectral norm of the decomposed operator.
    pub fn spectral_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Residuals `(|V*V - I|_max, |AV - V diag|_max)` against the source matrix.
    pub fn residuals(&self, a: &CMatrix) -> (f64, f64) {
        let n = self.vectors.rows();
        let gram = &self.vectors.adjoint() * &self.vectors;
        let ortho = gram.max_diff(&CMatrix::identity(self.vectors.cols()));
        let av = a * &self.vectors;
        let mut resid = 0.0f64;
        for j in 0..self.values.len() {
            for i in 0..n {
                let want = self.vectors[(i, j)] * self.values[j];
                resid = resid.max((av[(i, j)] - want).norm());
            }
        }
        (ortho, resid)
    }

    /// Reconstructs `sum lambda_i v_i v_i*`.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.vectors.rows();
        let mut out = CMatrix::zeros(n, n);
        for (k, &lambda) in self.values.iter().enumerate() {
            accumulate_outer(&mut out, &self.vectors, k, Complex64::new(lambda, 0.0));
        }
        out
    }
}

fn accumulate_outer(out: &mut CMatrix, vectors: &CMatrix, col: usize, weight: Complex64) {
    let n = vectors.rows();
    for i in 0..n {
        let vi = vectors[(i, col)] * weight;
        for j in 0..n {
            let add = vi * vectors[(j, col)].conj();
            out[(i, j)] += add;
        }
    }
}

/// Full eigendecomposition of a Hermitian matrix.
///
/// The input must be Hermitian within `1e-10 * |A|_max`; the returned system
/// satisfies the orthogonality and residual budgets `1e-10 * dim * |A|_max`
/// or the call fails with a diagnostic carrying the offending residual.
pub fn hermitian_eig(a: &CMatrix) -> Result<EigenSystem> {
    let tol = Tolerances::DEFAULT;
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let dim = a.dim();
    if dim == 0 {
        return Ok(EigenSystem {
            values: Vec::new(),
            vectors: CMatrix::zeros(0, 0),
        });
    }
    let scale = a.max_norm();
    let herm_resid = a.hermitian_residual();
    // Relative slack, with a machine-noise floor so that matrices which are
    // zero up to roundoff (residual ~ eps from products of O(1) operators)
    // still count as Hermitian.
    let herm_tol = (tol.hermitian * scale).max(16.0 * dim as f64 * f64::EPSILON);
    if herm_resid > herm_tol {
        return Err(Error::NotHermitian {
            residual: herm_resid,
            tol: herm_tol,
        });
    }
    // Symmetrize to kill representation noise before handing off.
    let h = a.hermitian_part();
    if dim == 1 {
        return Ok(EigenSystem {
            values: vec![h[(0, 0)].re],
            vectors: CMatrix::identity(1),
        });
    }
    let budget = iteration_budget(dim);
    let mut work: Vec<Complex64> = h.data().to_vec();
    let mut accum: Vec<Complex64> = CMatrix::identity(dim).data().to_vec();
    let off_residual = |a: &[Complex64]| {
        let mut worst = 0.0f64;
        for p in 0..dim {
            for q in (p + 1)..dim {
                worst = worst.max(a[p * dim + q].norm());
            }
        }
        worst
    };
    if jacobi_diagonalize(&mut work, &mut accum, dim, budget).is_none() {
        return Err(Error::EigenConvergence {
            residual: off_residual(&work),
            budget,
        });
    }
    let raw_values: Vec<f64> = (0..dim).map(|i| work[i * dim + i].re).collect();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| raw_values[i].partial_cmp(&raw_values[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| raw_values[i]).collect();
    let vectors = CMatrix::from_fn(dim, dim, |i, j| accum[i * dim + order[j]]);
    let system = EigenSystem { values, vectors };
    let (ortho, resid) = system.residuals(&h);
    let budget_resid = tol.eigen * (dim as f64) * scale.max(f64::MIN_POSITIVE);
    if ortho > budget_resid.max(tol.eigen) || resid > budget_resid.max(tol.eigen) {
        return Err(Error::EigenConvergence {
            residual: ortho.max(resid),
            budget,
        });
    }
    Ok(system)
}

/// Eigenvalue window membership with a machine-noise snap band and an
/// ambiguity guard.
///
/// Eigenvalues within `64 * dim * eps * |A|` of an endpoint are snapped into
/// the window (exact endpoint spectra are routine: projections at 1, sums at
/// 2, and solver noise must not evict them). Eigenvalues beyond the snap band
/// but within the `1e-12 * |A|` guard (widened to twice the snap band on
/// large matrices) are genuinely ambiguous and raise an error: the caller
/// must move the cut.
struct Window {
    lo: f64,
    hi: f64,
    snap: f64,
    guard: f64,
}

impl Window {
    fn new(lo: f64, hi: f64, dim: usize, spectral_norm: f64) -> Result<Window> {
        if !(lo < hi) {
            return Err(Error::InvalidWindow { lo, hi });
        }
        let scale = spectral_norm.max(f64::MIN_POSITIVE);
        let snap = 64.0 * dim as f64 * f64::EPSILON * scale;
        let guard = (Tolerances::DEFAULT.spectral_cut * scale).max(2.0 * snap);
        Ok(Window { lo, hi, snap, guard })
    }

    fn classify(&self, lambda: f64) -> Result<bool> {
        for endpoint in [self.lo, self.hi] {
            let dist = (lambda - endpoint).abs();
            if dist > self.snap && dist <= self.guard {
                return Err(Error::SpectralCutAmbiguous {
                    eigenvalue: lambda,
                    endpoint,
                });
            }
        }
        Ok(lambda >= self.lo - self.snap && lambda <= self.hi + self.snap)
    }
}

/// Spectral projection `1_[lo,hi](A)` together with its rank, computed from an
/// existing eigensystem.
pub fn spectral_projection_from_eig(
    eig: &EigenSystem,
    lo: f64,
    hi: f64,
) -> Result<(CMatrix, usize)> {
    let dim = eig.vectors.rows();
    let window = Window::new(lo, hi, dim, eig.spectral_norm())?;
    let mut out = CMatrix::zeros(dim, dim);
    let mut rank = 0;
    for (k, &lambda) in eig.values.iter().enumerate() {
        if window.classify(lambda)? {
            accumulate_outer(&mut out, &eig.vectors, k, Complex64::new(1.0, 0.0));
            rank += 1;
        }
    }
    Ok((out, rank))
}

/// Spectral projection `1_[lo,hi](A)` for Hermitian `A`.
pub fn spectral_projection(a: &CMatrix, lo: f64, hi: f64) -> Result<CMatrix> {
    let eig = hermitian_eig(a)?;
    Ok(spectral_projection_from_eig(&eig, lo, hi)?.0)
}

/// Hermitian PSD square root. Eigenvalues must be at least `-1e-10 * |A|`;
/// small negatives are clamped to zero.
pub fn sqrt_psd(a: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eig(a)?;
    let norm = eig.spectral_norm();
    let floor = -Tolerances::DEFAULT.psd * norm;
    if let Some(&min) = eig.values.first() {
        if min < floor {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
    }
    let dim = eig.vectors.rows();
    let mut out = CMatrix::zeros(dim, dim);
    for (k, &lambda) in eig.values.iter().enumerate() {
        let root = lambda.max(0.0).sqrt();
        if root != 0.0 {
            accumulate_outer(&mut out, &eig.vectors, k, Complex64::new(root, 0.0));
        }
    }
    Ok(out)
}

/// Diagnostics from projection validation.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ProjectionCheck {
    pub hermitian_residual: f64,
    pub idempotency_residual: f64,
    /// Eigenvalue of the Hermitian part farthest from `{0, 1}`.
    pub worst_eigenvalue: f64,
    pub pass: bool,
}

/// Pure predicate: is `A` an orthogonal projection within `tol`?
pub fn validate_projection(a: &CMatrix, tol: f64) -> Result<ProjectionCheck> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let hermitian_residual = a.hermitian_residual();
    let idempotency_residual = (&(a * a) - a).max_norm();
    let mut worst_eigenvalue = 0.0;
    let mut worst_gap = -1.0;
    if a.dim() > 0 {
        if let Ok(eig) = hermitian_eig(&a.hermitian_part()) {
            for &lambda in &eig.values {
                let gap = lambda.abs().min((lambda - 1.0).abs());
                if gap > worst_gap {
                    worst_gap = gap;
                    worst_eigenvalue = lambda;
                }
            }
        }
    }
    Ok(ProjectionCheck {
        hermitian_residual,
        idempotency_residual,
        worst_eigenvalue,
        pass: hermitian_residual <= tol && idempotency_residual <= tol,
    })
}

/// Singular values, descending, via the Hermitian eigenvalues of `A*A` (or
/// `AA*`, whichever is smaller).
pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>> {
    if a.rows() == 0 || a.cols() == 0 {
        return Ok(Vec::new());
    }
    let gram = if a.rows() >= a.cols() {
        &a.adjoint() * a
    } else {
        a * &a.adjoint()
    };
    let eig = hermitian_eig(&gram)?;
    let mut sv: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    sv.reverse();
    Ok(sv)
}

/// Operator (spectral) norm.
pub fn operator_norm(a: &CMatrix) -> Result<f64> {
    Ok(singular_values(a)?.first().copied().unwrap_or(0.0))
}

/// Fast operator-norm estimate by power iteration on `A* A`, for threshold
/// decisions that do not need the full decomposition. Deterministic start
/// vector; the estimate approaches the true norm from below and stops when
/// consecutive iterates agree to `rel_tol` (or after 512 rounds).
pub fn operator_norm_estimate(a: &CMatrix, rel_tol: f64) -> f64 {
    let (rows, cols) = (a.rows(), a.cols());
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    let mut v: Vec<Complex64> = (0..cols)
        .map(|j| Complex64::new(1.0 + (j as f64) / (cols as f64 + 1.0), 0.0))
        .collect();
    normalize(&mut v);
    let mut sigma = 0.0f64;
    for _ in 0..512 {
        let w = apply(a, &v, false);
        let next = norm2(&w);
        if next == 0.0 {
            return 0.0;
        }
        let mut back = apply(a, &w, true);
        normalize(&mut back);
        v = back;
        if (next - sigma).abs() <= rel_tol * next {
            return next;
        }
        sigma = next;
    }
    sigma
}

fn apply(a: &CMatrix, v: &[Complex64], adjoint: bool) -> Vec<Complex64> {
    if adjoint {
        (0..a.cols())
            .map(|j| (0..a.rows()).map(|i| a[(i, j)].conj() * v[i]).sum())
            .collect()
    } else {
        (0..a.rows())
            .map(|i| (0..a.cols()).map(|j| a[(i, j)] * v[j]).sum())
            .collect()
    }
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(v: &mut [Complex64]) {
    let n = norm2(v);
    if n > 0.0 {
        for z in v.iter_mut() {
            *z = *z / n;
        }
    }
}

/// Schatten p-norm `(sum sigma_i^p)^(1/p)`, `p >= 1`.
pub fn schatten_norm(a: &CMatrix, p: f64) -> Result<f64> {
    if p < 1.0 {
        return Err(Error::invalid(format!("Schatten p must be >= 1, got {p}")));
    }
    let sv = singular_values(a)?;
    Ok(sv.iter().map(|s| s.powf(p)).sum::<f64>().powf(1.0 / p))
}

/// Rank of a projection, read off the trace.
pub fn projection_rank(p: &CMatrix) -> usize {
    let t = p.trace().re;
    let r = t.round();
    debug_assert!((t - r).abs() < 1e-6, "trace {t} is not near an integer");
    r.max(0.0) as usize
}

/// Orthonormal bases of the range and kernel of a projection, split at the
/// eigenvalue 1/2. Accepts anything that passed `validate_projection`, so the
/// input is symmetrized before decomposition.
pub fn projection_bases(p: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let eig = hermitian_eig(&p.hermitian_part())?;
    let dim = p.dim();
    let mut range = Vec::new();
    let mut kernel = Vec::new();
    for (k, &lambda) in eig.values.iter().enumerate() {
        if lambda > 0.5 {
            range.push(eig.vectors.column(k));
        } else {
            kernel.push(eig.vectors.column(k));
        }
    }
    Ok((
        CMatrix::from_columns(dim, &range),
        CMatrix::from_columns(dim, &kernel),
    ))
}

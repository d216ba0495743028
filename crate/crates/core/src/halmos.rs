//! Canonical form for a pair of orthogonal projections.
//!
//! Any two projections decompose the space into four aligned blocks
//! (`ran P ∩ ker Q`, `ran P ∩ ran Q`, `ker P ∩ ran Q`, `ker P ∩ ker Q`)
//! plus two copies of a generic part carrying a positive contraction `S`
//! whose spectrum avoids `{0, 1}`. This module computes the decomposition,
//! inverts it, and derives principal angles and a unitary-equivalence
//! fingerprint from it.

use num_complex::Complex64;
use serde::Serialize;

use crate::cmatrix::CMatrix;
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::spectral::{hermitian_eig, projection_bases, validate_projection};

/// A validated pair of orthogonal projections on the same space.
#[derive(Debug, Clone)]
pub struct ProjectionPair {
    p: CMatrix,
    q: CMatrix,
}

impl ProjectionPair {
    pub fn new(p: CMatrix, q: CMatrix) -> Result<Self> {
        Self::with_tolerance(p, q, Tolerances::DEFAULT.projection)
    }

    pub fn with_tolerance(p: CMatrix, q: CMatrix, tol: f64) -> Result<Self> {
        if !p.is_square() || !q.is_square() || p.rows() != q.rows() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "projection pair needs equal square matrices, got {}x{} and {}x{}",
                    p.rows(),
                    p.cols(),
                    q.rows(),
                    q.cols()
                ),
            });
        }
        for m in [&p, &q] {
            let check = validate_projection(m, tol)?;
            if !check.pass {
                return Err(Error::NotProjection {
                    hermitian_residual: check.hermitian_residual,
                    idempotency_residual: check.idempotency_residual,
                    tol,
                });
            }
        }
        Ok(ProjectionPair { p, q })
    }

    pub fn p(&self) -> &CMatrix {
        &self.p
    }

    pub fn q(&self) -> &CMatrix {
        &self.q
    }

    pub fn dim(&self) -> usize {
        self.p.rows()
    }

    /// The pair `(Q, P)`.
    pub fn swapped(&self) -> ProjectionPair {
        ProjectionPair {
            p: self.q.clone(),
            q: self.p.clone(),
        }
    }

    /// The pair `(P, I - Q)`.
    pub fn complement_second(&self) -> ProjectionPair {
        let id = CMatrix::identity(self.dim());
        ProjectionPair {
            p: self.p.clone(),
            q: &id - &self.q,
        }
    }

    /// The pair `(I - P, I - Q)`.
    pub fn complement_both(&self) -> ProjectionPair {
        let id = CMatrix::identity(self.dim());
        ProjectionPair {
            p: &id - &self.p,
            q: &id - &self.q,
        }
    }
}

/// The six-block canonical form. Column blocks of `U` are ordered
/// `H0 | H1 | H'_P | H'_Q | H2 | H3` with widths `d0, d1, dg, dg, d2, d3`.
#[derive(Debug, Clone, Serialize)]
pub struct HalmosForm {
    /// Aligned block dimensions `[d0, d1, d2, d3]`.
    pub d: [usize; 4],
    /// Dimension of each generic copy.
    pub dg: usize,
    /// Generic spectrum, strictly inside `(tol, 1 - tol)`, descending.
    pub s: Vec<f64>,
    #[serde(rename = "U")]
    pub u: CMatrix,
    #[serde(rename = "tol")]
    pub tol_used: f64,
}

impl HalmosForm {
    pub fn dim(&self) -> usize {
        self.d.iter().sum::<usize>() + 2 * self.dg
    }

    pub fn rank_p(&self) -> usize {
        self.d[0] + self.d[1] + self.dg
    }

    pub fn rank_q(&self) -> usize {
        self.d[1] + self.dg + self.d[2]
    }

    /// Purely generic model form with spectrum `s` (descending) and `U = I`.
    pub fn generic_model(s: &[f64]) -> HalmosForm {
        HalmosForm {
            d: [0; 4],
            dg: s.len(),
            s: s.to_vec(),
            u: CMatrix::identity(2 * s.len()),
            tol_used: Tolerances::DEFAULT.cluster,
        }
    }

    /// Column offsets of the six blocks inside `U`.
    fn offsets(&self) -> [usize; 6] {
        let [d0, d1, d2, _d3] = self.d;
        let o0 = 0;
        let o1 = o0 + d0;
        let op = o1 + d1;
        let oq = op + self.dg;
        let o2 = oq + self.dg;
        let o3 = o2 + d2;
        [o0, o1, op, oq, o2, o3]
    }

    /// `P` in model coordinates: identity on `H0, H1, H'_P`, zero elsewhere.
    pub fn model_p(&self) -> CMatrix {
        let dim = self.dim();
        let mut m = CMatrix::zeros(dim, dim);
        for i in 0..self.d[0] + self.d[1] + self.dg {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// `Q` in model coordinates: identity on `H1, H2`, the 2x2 contraction
    /// blocks `[[s, x], [x, 1-s]]` with `x = sqrt(s(1-s))` across the two
    /// generic copies.
    pub fn model_q(&self) -> CMatrix {
        let dim = self.dim();
        let [_, o1, op, oq, o2, _] = self.offsets();
        let mut m = CMatrix::zeros(dim, dim);
        for i in o1..o1 + self.d[1] {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        for i in o2..o2 + self.d[2] {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        for (k, &s) in self.s.iter().enumerate() {
            let x = (s * (1.0 - s)).sqrt();
            m[(op + k, op + k)] = Complex64::new(s, 0.0);
            m[(op + k, oq + k)] = Complex64::new(x, 0.0);
            m[(oq + k, op + k)] = Complex64::new(x, 0.0);
            m[(oq + k, oq + k)] = Complex64::new(1.0 - s, 0.0);
        }
        m
    }

    /// Columns of `U` spanning `ran P ∩ ran Q`.
    pub fn meet_columns(&self) -> CMatrix {
        let [_, o1, ..] = self.offsets();
        let cols: Vec<Vec<Complex64>> =
            (o1..o1 + self.d[1]).map(|j| self.u.column(j)).collect();
        CMatrix::from_columns(self.u.rows(), &cols)
    }
}

/// Canonical unitary-equivalence record: block dimensions plus the generic
/// spectrum rounded to 1e-6 (stored in integer micro-units so equality is
/// exact).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Fingerprint {
    pub d: [usize; 4],
    pub s_micro: Vec<i64>,
}

/// Computes the canonical form of a pair.
///
/// Classification: eigenvalues of the compression of `PQP` to `ran P` at most
/// `tol_cluster` feed `H0`, at least `1 - tol_cluster` feed `H1`, the rest are
/// generic. The second generic copy is constructed as `(I-P)Q p_i`, normalized
/// by the forced factor `sqrt(s_i (1 - s_i))`; the kernel-side
/// eigendecomposition is used only as a consistency assertion.
pub fn decompose(pair: &ProjectionPair, tol_cluster: f64) -> Result<HalmosForm> {
    if !(tol_cluster > 0.0 && tol_cluster < 0.25) {
        return Err(Error::InvalidTolerance { value: tol_cluster });
    }
    let dim = pair.dim();
    let (range_p, kernel_p) = projection_bases(pair.p())?;

    // ran P side: compression of PQP.
    let m1 = (&(&range_p.adjoint() * pair.q()) * &range_p).hermitian_part();
    let eig1 = hermitian_eig(&m1)?;
    let mut h0: Vec<Vec<Complex64>> = Vec::new();
    let mut h1: Vec<Vec<Complex64>> = Vec::new();
    let mut generic: Vec<(f64, Vec<Complex64>)> = Vec::new();
    for (k, &lambda) in eig1.values.iter().enumerate() {
        let v = eig1.vectors.column(k);
        let p_vec = mat_vec(&range_p, &v);
        if lambda <= tol_cluster {
            h0.push(p_vec);
        } else if lambda >= 1.0 - tol_cluster {
            h1.push(p_vec);
        } else {
            generic.push((lambda, p_vec));
        }
    }
    // Descending generic spectrum.
    generic.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let s: Vec<f64> = generic.iter().map(|(l, _)| *l).collect();
    let dg = s.len();

    // Paired copy in ker P, with the forced normalization.
    let mut hq: Vec<Vec<Complex64>> = Vec::with_capacity(dg);
    for (lambda, p_vec) in &generic {
        let qp = mat_vec_matrix(pair.q(), p_vec);
        let pqp = mat_vec_matrix(pair.p(), &qp);
        let mut w: Vec<Complex64> = qp.iter().zip(&pqp).map(|(a, b)| a - b).collect();
        let norm: f64 = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let expected = (lambda * (1.0 - lambda)).sqrt();
        if norm < 0.5 * expected {
            return Err(Error::InconsistentGenericPart {
                residual: (norm - expected).abs(),
            });
        }
        for z in w.iter_mut() {
            *z = *z / norm;
        }
        hq.push(w);
    }

    // ker P side: compression of (I-P)Q(I-P), for H2/H3 and the span assertion.
    let m2 = (&(&kernel_p.adjoint() * pair.q()) * &kernel_p).hermitian_part();
    let eig2 = hermitian_eig(&m2)?;
    let mut h2: Vec<Vec<Complex64>> = Vec::new();
    let mut h3: Vec<Vec<Complex64>> = Vec::new();
    let mut mid2: Vec<Vec<Complex64>> = Vec::new();
    for (k, &lambda) in eig2.values.iter().enumerate() {
        let v = eig2.vectors.column(k);
        let vec = mat_vec(&kernel_p, &v);
        if lambda <= tol_cluster {
            h3.push(vec);
        } else if lambda >= 1.0 - tol_cluster {
            h2.push(vec);
        } else {
            mid2.push(vec);
        }
    }
    if mid2.len() != dg {
        return Err(Error::InconsistentGenericPart {
            residual: (mid2.len() as f64 - dg as f64).abs(),
        });
    }
    // The constructed copy must span the same subspace as the kernel-side
    // generic eigenvectors.
    let mut span_residual = 0.0f64;
    if dg > 0 {
        let w = CMatrix::from_columns(dim, &mid2);
        for q_col in &hq {
            let coeffs = mat_vec(&w.adjoint(), q_col);
            let back = mat_vec(&w, &coeffs);
            let resid: f64 = q_col
                .iter()
                .zip(&back)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            span_residual = span_residual.max(resid);
        }
        if span_residual > 1e-8 {
            return Err(Error::InconsistentGenericPart {
                residual: span_residual,
            });
        }
    }

    let d = [h0.len(), h1.len(), h2.len(), h3.len()];
    let mut columns: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
    columns.extend(h0);
    columns.extend(h1);
    columns.extend(generic.into_iter().map(|(_, v)| v));
    columns.extend(hq);
    columns.extend(h2);
    columns.extend(h3);
    let u = CMatrix::from_columns(dim, &columns);

    Ok(HalmosForm {
        d,
        dg,
        s,
        u,
        tol_used: tol_cluster,
    })
}

/// Rebuilds the pair `(U P_model U*, U Q_model U*)` from a form.
pub fn reconstruct(form: &HalmosForm) -> Result<ProjectionPair> {
    let u_adj = form.u.adjoint();
    let p = &(&form.u * &form.model_p()) * &u_adj;
    let q = &(&form.u * &form.model_q()) * &u_adj;
    ProjectionPair::new(p, q)
}

/// Principal angles between the two ranges, ascending in `[0, pi/2]`.
#[derive(Debug, Clone, Serialize)]
pub struct PrincipalAngles {
    pub angles: Vec<f64>,
    /// Count of exactly-aligned directions (angle 0 at the cluster tolerance).
    pub zero_multiplicity: usize,
    /// Count of orthogonal directions (angle pi/2 at the cluster tolerance).
    pub right_angle_multiplicity: usize,
}

/// Angles via the singular values of `B_P* B_Q` for orthonormal range bases;
/// computed independently of the canonical decomposition.
pub fn principal_angles(pair: &ProjectionPair) -> Result<PrincipalAngles> {
    let (bp, _) = projection_bases(pair.p())?;
    let (bq, _) = projection_bases(pair.q())?;
    let m = &bp.adjoint() * &bq;
    let sv = crate::spectral::singular_values(&m)?;
    let count = bp.cols().min(bq.cols());
    let mut angles: Vec<f64> = sv
        .iter()
        .take(count)
        .map(|&s| s.clamp(0.0, 1.0).acos())
        .collect();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // cos^2(theta) within the cluster tolerance of 1 or 0.
    let angle_tol = Tolerances::DEFAULT.cluster.sqrt();
    let zero_multiplicity = angles.iter().filter(|&&a| a <= angle_tol).count();
    let right_angle_multiplicity = angles
        .iter()
        .filter(|&&a| a >= std::f64::consts::FRAC_PI_2 - angle_tol)
        .count();
    Ok(PrincipalAngles {
        angles,
        zero_multiplicity,
        right_angle_multiplicity,
    })
}

/// Complete unitary invariant of the pair at 1e-6 spectral resolution.
pub fn unitary_equivalence_fingerprint(pair: &ProjectionPair) -> Result<Fingerprint> {
    let form = decompose(pair, Tolerances::DEFAULT.cluster)?;
    let mut s_micro: Vec<i64> = form.s.iter().map(|&x| (x * 1e6).round() as i64).collect();
    s_micro.sort_by(|a, b| b.cmp(a));
    Ok(Fingerprint { d: form.d, s_micro })
}

fn mat_vec(m: &CMatrix, v: &[Complex64]) -> Vec<Complex64> {
    debug_assert_eq!(m.cols(), v.len());
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

fn mat_vec_matrix(m: &CMatrix, v: &[Complex64]) -> Vec<Complex64> {
    mat_vec(m, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{random_pair, random_projection, random_unitary, FixtureRng};

    pub(crate) fn quarter_pair() -> ProjectionPair {
        let r3 = 3.0f64.sqrt();
        let p = CMatrix::diag_real(&[1.0, 0.0]);
        let q = CMatrix::from_real(2, 2, &[0.25, r3 / 4.0, r3 / 4.0, 0.75]).unwrap();
        ProjectionPair::new(p, q).unwrap()
    }

    #[test]
    fn quarter_pair_is_purely_generic() {
        let form = decompose(&quarter_pair(), 1e-8).unwrap();
        assert_eq!(form.d, [0, 0, 0, 0]);
        assert_eq!(form.dg, 1);
        assert!((form.s[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn identical_pair_has_no_generic_part() {
        let mut rng = FixtureRng::new(1);
        let p = random_projection(7, 3, &mut rng);
        let pair = ProjectionPair::new(p.clone(), p).unwrap();
        let form = decompose(&pair, 1e-8).unwrap();
        assert_eq!(form.dg, 0);
        assert_eq!(form.d, [0, 3, 0, 4]);
    }

    #[test]
    fn orthogonal_ranges() {
        let p = CMatrix::diag_real(&[1.0, 0.0]);
        let q = CMatrix::diag_real(&[0.0, 1.0]);
        let pair = ProjectionPair::new(p, q).unwrap();
        let form = decompose(&pair, 1e-8).unwrap();
        assert_eq!(form.d, [1, 0, 1, 0]);
        assert_eq!(form.dg, 0);
    }

    #[test]
    fn block_model_matches_within_tolerance() {
        let mut rng = FixtureRng::new(17);
        let pair = random_pair(12, &mut rng);
        let form = decompose(&pair, 1e-8).unwrap();
        let u_adj = form.u.adjoint();
        // U unitary.
        assert!((&u_adj * &form.u).max_diff(&CMatrix::identity(pair.dim())) < 1e-9);
        // U* P U and U* Q U match the model blocks.
        let p_model = &(&u_adj * pair.p()) * &form.u;
        let q_model = &(&u_adj * pair.q()) * &form.u;
        assert!(p_model.max_diff(&form.model_p()) < 1e-8);
        assert!(q_model.max_diff(&form.model_q()) < 1e-8);
    }

    #[test]
    fn round_trip_quarter_pair() {
        let pair = quarter_pair();
        let form = decompose(&pair, 1e-8).unwrap();
        let back = reconstruct(&form).unwrap();
        assert!(back.p().max_diff(pair.p()) < 1e-12);
        assert!(back.q().max_diff(pair.q()) < 1e-12);
    }

    #[test]
    fn round_trip_random_pair_dim_40() {
        let mut rng = FixtureRng::new(40);
        let pair = random_pair(40, &mut rng);
        let form = decompose(&pair, 1e-8).unwrap();
        let back = reconstruct(&form).unwrap();
        assert!(back.p().max_diff(pair.p()) <= 1e-8);
        assert!(back.q().max_diff(pair.q()) <= 1e-8);
    }

    #[test]
    fn dimension_accounting_and_trace_identity() {
        let mut rng = FixtureRng::new(5);
        for _ in 0..20 {
            let dim = rng.range(2, 16);
            let pair = random_pair(dim, &mut rng);
            let form = decompose(&pair, 1e-8).unwrap();
            assert_eq!(form.d.iter().sum::<usize>() + 2 * form.dg, dim);
            let pqp = &(pair.p() * pair.q()) * pair.p();
            let trace = pqp.trace().re;
            let model: f64 = form.d[1] as f64 + form.s.iter().sum::<f64>();
            assert!((trace - model).abs() < 1e-8, "trace {trace} vs {model}");
        }
    }

    #[test]
    fn meet_complement_symmetry() {
        let mut rng = FixtureRng::new(23);
        let pair = random_pair(10, &mut rng);
        let form = decompose(&pair, 1e-8).unwrap();
        let swapped = decompose(&pair.complement_second(), 1e-8).unwrap();
        assert_eq!(swapped.d, [form.d[1], form.d[0], form.d[3], form.d[2]]);
        let mut flipped: Vec<f64> = form.s.iter().map(|&x| 1.0 - x).collect();
        flipped.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert_eq!(flipped.len(), swapped.s.len());
        for (a, b) in flipped.iter().zip(&swapped.s) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn principal_angles_quarter_pair() {
        let angles = principal_angles(&quarter_pair()).unwrap();
        assert_eq!(angles.angles.len(), 1);
        assert!((angles.angles[0] - std::f64::consts::FRAC_PI_3).abs() < 1e-12);
    }

    #[test]
    fn principal_angles_aligned_and_orthogonal() {
        let mut rng = FixtureRng::new(2);
        let p = random_projection(6, 3, &mut rng);
        let same = principal_angles(&ProjectionPair::new(p.clone(), p).unwrap()).unwrap();
        assert_eq!(same.zero_multiplicity, 3);
        assert!(same.angles.iter().all(|&a| a < 1e-6));

        let e1 = CMatrix::diag_real(&[1.0, 0.0]);
        let e2 = CMatrix::diag_real(&[0.0, 1.0]);
        let orth = principal_angles(&ProjectionPair::new(e1, e2).unwrap()).unwrap();
        assert_eq!(orth.right_angle_multiplicity, 1);
    }

    #[test]
    fn principal_angles_match_generic_spectrum() {
        let mut rng = FixtureRng::new(31);
        let pair = random_pair(14, &mut rng);
        let form = decompose(&pair, 1e-8).unwrap();
        let angles = principal_angles(&pair).unwrap();
        // Multiset {cos^2 theta} must contain {s_i} plus d1 ones.
        let mut cos2: Vec<f64> = angles.angles.iter().map(|a| a.cos().powi(2)).collect();
        cos2.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut want: Vec<f64> = vec![1.0; form.d[1]];
        want.extend(form.s.iter().copied());
        for (a, b) in want.iter().zip(&cos2) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn fingerprint_invariance_under_conjugation() {
        let mut rng = FixtureRng::new(77);
        let pair = random_pair(9, &mut rng);
        let w = random_unitary(9, &mut rng);
        let wp = &(&w * pair.p()) * &w.adjoint();
        let wq = &(&w * pair.q()) * &w.adjoint();
        let conj = ProjectionPair::new(wp, wq).unwrap();
        assert_eq!(
            unitary_equivalence_fingerprint(&pair).unwrap(),
            unitary_equivalence_fingerprint(&conj).unwrap()
        );
    }

    #[test]
    fn fingerprint_swap_symmetry() {
        // Brute force on small dims: swapping (P, Q) swaps d0 <-> d2 and
        // keeps the generic spectrum.
        let mut rng = FixtureRng::new(6);
        for dim in 2..=6 {
            let pair = random_pair(dim, &mut rng);
            let fp = unitary_equivalence_fingerprint(&pair).unwrap();
            let fq = unitary_equivalence_fingerprint(&pair.swapped()).unwrap();
            assert_eq!(fq.d, [fp.d[2], fp.d[1], fp.d[0], fp.d[3]]);
            assert_eq!(fp.s_micro, fq.s_micro);
        }
    }

    #[test]
    fn fingerprint_distinguishes_p_from_complement() {
        let mut rng = FixtureRng::new(8);
        let p = random_projection(5, 2, &mut rng);
        let id = CMatrix::identity(5);
        let with_self =
            unitary_equivalence_fingerprint(&ProjectionPair::new(p.clone(), p.clone()).unwrap())
                .unwrap();
        let with_comp =
            unitary_equivalence_fingerprint(&ProjectionPair::new(p.clone(), &id - &p).unwrap())
                .unwrap();
        assert_ne!(with_self, with_comp);
    }

    #[test]
    fn rank_zero_and_full_rank_are_legal() {
        let zero = CMatrix::zeros(4, 4);
        let id = CMatrix::identity(4);
        let form = decompose(&ProjectionPair::new(zero, id.clone()).unwrap(), 1e-8).unwrap();
        assert_eq!(form.d, [0, 0, 4, 0]);
        let form = decompose(
            &ProjectionPair::new(id.clone(), CMatrix::zeros(4, 4)).unwrap(),
            1e-8,
        )
        .unwrap();
        assert_eq!(form.d, [4, 0, 0, 0]);
    }

    #[test]
    fn invalid_tolerance_rejected() {
        let pair = quarter_pair();
        assert!(matches!(
            decompose(&pair, 0.3),
            Err(Error::InvalidTolerance { .. })
        ));
        assert!(matches!(
            decompose(&pair, 0.0),
            Err(Error::InvalidTolerance { .. })
        ));
    }

    #[test]
    fn rejects_non_projection_input() {
        let almost = CMatrix::diag_real(&[1.0, 0.4]);
        let err = ProjectionPair::new(almost, CMatrix::identity(2)).unwrap_err();
        assert!(matches!(err, Error::NotProjection { .. }));
    }
}

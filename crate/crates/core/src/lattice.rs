//! Span and intersection constructions with spectral certificates.
//!
//! In finite dimension every sum of ranges is closed, so instead of a boolean
//! the certificate reports the quantitative spectral gap below 1 in the
//! generic spectrum. Decay of that gap across a truncation family is the
//! finite-dimensional signature of a non-closed span.

use serde::Serialize;

use crate::cmatrix::CMatrix;
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::halmos::{decompose, HalmosForm, ProjectionPair};
use crate::spectral::{
    hermitian_eig, projection_bases, spectral_projection_from_eig, validate_projection,
    EigenSystem,
};

/// Quantitative closedness data for `ran P + ran Q`.
#[derive(Debug, Clone, Serialize)]
pub struct SpanCertificate {
    /// `1 - max{generic spectrum}`, or 1 when the generic part is empty.
    pub gap_to_one: f64,
    /// Interval `(eps, 1)` verified free of generic eigenvalues.
    pub epsilon_window: (f64, f64),
    /// Always true in finite dimension; the gap is the quantitative content.
    pub closed_verdict: bool,
    /// `d0 + d1 + 2 dg + d2`.
    pub rank_r: usize,
}

/// Projection onto `ran P ∩ ran Q`, read off the aligned `H1` block of the
/// canonical form (one source of truth; tests cross-check an alternating-
/// projections oracle against it).
pub fn meet(pair: &ProjectionPair) -> Result<CMatrix> {
    let form = decompose(pair, Tolerances::DEFAULT.cluster)?;
    meet_from_form(&form)
}

pub fn meet_from_form(form: &HalmosForm) -> Result<CMatrix> {
    if form.d[1] == 0 {
        return Ok(CMatrix::zeros(form.dim(), form.dim()));
    }
    let cols = form.meet_columns();
    Ok(&cols * &cols.adjoint())
}

/// Projection onto `ran P + ran Q` via the spectral projection of `P + Q`
/// above its zero cluster.
pub fn join(pair: &ProjectionPair) -> Result<CMatrix> {
    Ok(join_with_rank(pair)?.0)
}

pub fn join_with_rank(pair: &ProjectionPair) -> Result<(CMatrix, usize)> {
    let sum = (pair.p() + pair.q()).hermitian_part();
    let eig = hermitian_eig(&sum)?;
    join_from_sum_eig(&eig)
}

/// Join construction given a precomputed eigensystem of `P + Q`.
pub fn join_from_sum_eig(eig: &EigenSystem) -> Result<(CMatrix, usize)> {
    let epsilon = match half_smallest_above_zero_cluster(&eig.values) {
        Some(e) => e,
        None => {
            let dim = eig.vectors.rows();
            return Ok((CMatrix::zeros(dim, dim), 0));
        }
    };
    spectral_projection_from_eig(eig, epsilon, 2.0)
}

/// Half the smallest eigenvalue above the zero cluster, or `None` when the
/// whole spectrum sits in the cluster.
fn half_smallest_above_zero_cluster(values: &[f64]) -> Option<f64> {
    let norm = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let cluster = Tolerances::DEFAULT.zero_cluster * norm.max(1.0);
    values.iter().find(|&&v| v > cluster).map(|&v| 0.5 * v)
}

/// The spectral gap certificate for the span of the pair.
pub fn span_certificate(pair: &ProjectionPair) -> Result<SpanCertificate> {
    let form = decompose(pair, Tolerances::DEFAULT.cluster)?;
    Ok(span_certificate_from_form(&form))
}

pub fn span_certificate_from_form(form: &HalmosForm) -> SpanCertificate {
    let gap_to_one = match form.s.first() {
        Some(&s_max) => 1.0 - s_max,
        None => 1.0,
    };
    SpanCertificate {
        gap_to_one,
        epsilon_window: (1.0 - gap_to_one, 1.0),
        closed_verdict: true,
        rank_r: form.d[0] + form.d[1] + 2 * form.dg + form.d[2],
    }
}

/// Span projection through the algebra: `1_[eps,1](P + (I-P)Q(I-P))`.
///
/// The window `(zero cluster, eps)` must be free of eigenvalues, otherwise
/// the cut is ambiguous and the call fails; with the default `eps` (half the
/// smallest eigenvalue above the zero cluster) the window is clean by
/// construction. Equality with `join` is the executable content of the
/// algebra-membership theorem for the span projection.
pub fn span_projection_algebraic(pair: &ProjectionPair, epsilon: Option<f64>) -> Result<CMatrix> {
    let id = CMatrix::identity(pair.dim());
    let complement = &id - pair.p();
    let operator = (&(&(&complement * pair.q()) * &complement) + pair.p()).hermitian_part();
    let eig = hermitian_eig(&operator)?;
    let norm = eig.spectral_norm();
    let cluster = Tolerances::DEFAULT.zero_cluster * norm.max(1.0);
    let epsilon = match (epsilon, half_smallest_above_zero_cluster(&eig.values)) {
        (Some(e), _) => e,
        (None, Some(e)) => e,
        (None, None) => return Ok(CMatrix::zeros(pair.dim(), pair.dim())),
    };
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidWindow {
            lo: epsilon,
            hi: 1.0,
        });
    }
    // Every eigenvalue below the cut must belong to the zero cluster.
    for &lambda in &eig.values {
        if lambda > cluster && lambda < epsilon {
            return Err(Error::SpectralCutAmbiguous {
                eigenvalue: lambda,
                endpoint: epsilon,
            });
        }
    }
    Ok(spectral_projection_from_eig(&eig, epsilon, 1.0)?.0)
}

/// Compresses the pair to the orthogonal complement of a common subspace.
///
/// `rsharp` must be a projection with `ran rsharp ⊆ ran P ∩ ran Q`; the
/// reduced pair lives on the complement in a fresh orthonormal basis and
/// keeps the generic spectrum of the original (gap invariance).
pub fn reduce_by_common_subspace(
    pair: &ProjectionPair,
    rsharp: &CMatrix,
) -> Result<ProjectionPair> {
    let tol = Tolerances::DEFAULT.projection;
    let check = validate_projection(rsharp, tol)?;
    if !check.pass {
        return Err(Error::NotProjection {
            hermitian_residual: check.hermitian_residual,
            idempotency_residual: check.idempotency_residual,
            tol,
        });
    }
    if rsharp.rows() != pair.dim() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "common subspace lives on dim {}, pair on dim {}",
                rsharp.rows(),
                pair.dim()
            ),
        });
    }
    let p_contain = (&(pair.p() * rsharp) - rsharp).max_norm();
    let q_contain = (&(pair.q() * rsharp) - rsharp).max_norm();
    let residual = p_contain.max(q_contain);
    if residual > tol {
        return Err(Error::ContainmentViolation { residual });
    }
    let (_, complement) = projection_bases(rsharp)?;
    let reduce = |m: &CMatrix| (&(&complement.adjoint() * m) * &complement).hermitian_part();
    ProjectionPair::new(reduce(pair.p()), reduce(pair.q()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{random_pair, random_pair_with_common_subspace, FixtureRng};
    use crate::spectral::projection_rank;
    use num_complex::Complex64;

    fn quarter_pair() -> ProjectionPair {
        let r3 = 3.0f64.sqrt();
        let p = CMatrix::diag_real(&[1.0, 0.0]);
        let q = CMatrix::from_real(2, 2, &[0.25, r3 / 4.0, r3 / 4.0, 0.75]).unwrap();
        ProjectionPair::new(p, q).unwrap()
    }

    /// Alternating-projections oracle `lim (PQ)^k P`, test-only: capped at
    /// 1e4 iterations or step below 1e-12.
    fn alternating_meet(pair: &ProjectionPair) -> CMatrix {
        let mut x = pair.p().clone();
        for _ in 0..10_000 {
            let next = &(pair.p() * pair.q()) * &x;
            let step = next.max_diff(&x);
            x = next;
            if step < 1e-12 {
                break;
            }
        }
        x
    }

    #[test]
    fn meet_of_identical_pair_is_p() {
        let mut rng = FixtureRng::new(4);
        let p = crate::fixtures::random_projection(6, 2, &mut rng);
        let pair = ProjectionPair::new(p.clone(), p.clone()).unwrap();
        assert!(meet(&pair).unwrap().max_diff(&p) < 1e-9);
    }

    #[test]
    fn meet_of_quarter_pair_is_zero() {
        assert!(meet(&quarter_pair()).unwrap().max_norm() < 1e-12);
    }

    #[test]
    fn meet_brute_force_basis_intersection() {
        // P = diag(1,1,0), Q projects onto span{e1, (e2+e3)/sqrt2};
        // the intersection is the line through e1.
        let p = CMatrix::diag_real(&[1.0, 1.0, 0.0]);
        let h = 0.5;
        let q = CMatrix::from_real(3, 3, &[1.0, 0.0, 0.0, 0.0, h, h, 0.0, h, h]).unwrap();
        let pair = ProjectionPair::new(p, q).unwrap();
        let m = meet(&pair).unwrap();
        let want = CMatrix::diag_real(&[1.0, 0.0, 0.0]);
        assert!(m.max_diff(&want) < 1e-9);
        assert_eq!(projection_rank(&m), 1);
    }

    #[test]
    fn meet_matches_alternating_projection_oracle() {
        let mut rng = FixtureRng::new(15);
        for _ in 0..5 {
            let dim = rng.range(3, 10);
            let pair = random_pair(dim, &mut rng);
            let fast = meet(&pair).unwrap();
            let slow = alternating_meet(&pair);
            assert!(fast.max_diff(&slow) < 1e-7);
        }
    }

    #[test]
    fn join_orthogonal_ranges_is_sum() {
        let p = CMatrix::diag_real(&[1.0, 0.0, 0.0]);
        let q = CMatrix::diag_real(&[0.0, 1.0, 0.0]);
        let pair = ProjectionPair::new(p.clone(), q.clone()).unwrap();
        let j = join(&pair).unwrap();
        assert!(j.max_diff(&(&p + &q)) < 1e-12);
    }

    #[test]
    fn join_quarter_pair_is_identity() {
        let j = join(&quarter_pair()).unwrap();
        assert!(j.max_diff(&CMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn join_of_identical_pair_is_p() {
        let mut rng = FixtureRng::new(44);
        let p = crate::fixtures::random_projection(5, 3, &mut rng);
        let pair = ProjectionPair::new(p.clone(), p.clone()).unwrap();
        assert!(join(&pair).unwrap().max_diff(&p) < 1e-9);
    }

    #[test]
    fn join_of_zero_pair_is_zero() {
        let z = CMatrix::zeros(3, 3);
        let pair = ProjectionPair::new(z.clone(), z).unwrap();
        assert_eq!(join_with_rank(&pair).unwrap().1, 0);
    }

    #[test]
    fn certificate_quarter_pair() {
        let cert = span_certificate(&quarter_pair()).unwrap();
        assert!((cert.gap_to_one - 0.75).abs() < 1e-12);
        assert_eq!(cert.rank_r, 2);
        assert!(cert.closed_verdict);
    }

    #[test]
    fn certificate_identical_pair_has_full_gap() {
        let mut rng = FixtureRng::new(3);
        let p = crate::fixtures::random_projection(6, 2, &mut rng);
        let cert = span_certificate(&ProjectionPair::new(p.clone(), p).unwrap()).unwrap();
        assert_eq!(cert.gap_to_one, 1.0);
    }

    #[test]
    fn algebraic_span_on_identical_pair() {
        let mut rng = FixtureRng::new(10);
        let p = crate::fixtures::random_projection(6, 3, &mut rng);
        let pair = ProjectionPair::new(p.clone(), p.clone()).unwrap();
        for eps in [0.2, 0.5, 0.8] {
            let r = span_projection_algebraic(&pair, Some(eps)).unwrap();
            assert!(r.max_diff(&p) < 1e-9);
        }
    }

    #[test]
    fn algebraic_span_quarter_pair_hand_computed() {
        // P + (I-P)Q(I-P) = diag(1, 3/4): spectrum {1, 3/4}, eps = 0.4 works.
        let r = span_projection_algebraic(&quarter_pair(), Some(0.4)).unwrap();
        assert!(r.max_diff(&CMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn algebraic_span_rejects_dirty_epsilon() {
        // eps above the eigenvalue 3/4 leaves it stranded below the cut.
        let err = span_projection_algebraic(&quarter_pair(), Some(0.9)).unwrap_err();
        assert!(matches!(err, Error::SpectralCutAmbiguous { .. }));
    }

    #[test]
    fn algebraic_span_equals_join_on_random_pairs() {
        let mut rng = FixtureRng::new(50);
        for _ in 0..50 {
            let dim = rng.range(2, 12);
            let pair = random_pair(dim, &mut rng);
            let a = span_projection_algebraic(&pair, None).unwrap();
            let b = join(&pair).unwrap();
            assert!(a.max_diff(&b) <= 1e-8);
        }
    }

    #[test]
    fn order_relations_and_rank_identity() {
        let mut rng = FixtureRng::new(60);
        for _ in 0..10 {
            let dim = rng.range(2, 10);
            let pair = random_pair(dim, &mut rng);
            let j = join(&pair).unwrap();
            let m = meet(&pair).unwrap();
            // PSD order: join >= P, meet <= P (eigenvalues of differences).
            for (big, small) in [(&j, pair.p()), (&j, pair.q()), (pair.p(), &m), (pair.q(), &m)] {
                let diff = (big - small).hermitian_part();
                let min = hermitian_eig(&diff).unwrap().values[0];
                assert!(min > -1e-9, "order violation: min eigenvalue {min}");
            }
            let rp = projection_rank(pair.p());
            let rq = projection_rank(pair.q());
            assert_eq!(projection_rank(&j) + projection_rank(&m), rp + rq);
        }
    }

    #[test]
    fn de_morgan_on_random_pairs() {
        let mut rng = FixtureRng::new(61);
        for _ in 0..5 {
            let dim = rng.range(2, 9);
            let pair = random_pair(dim, &mut rng);
            let id = CMatrix::identity(dim);
            let lhs = &id - &join(&pair).unwrap();
            let rhs = meet(&pair.complement_both()).unwrap();
            assert!(lhs.max_diff(&rhs) < 1e-9);
        }
    }

    #[test]
    fn reduce_by_meet_kills_aligned_block() {
        let mut rng = FixtureRng::new(70);
        let (pair, _) = random_pair_with_common_subspace(8, 2, &mut rng);
        let full_meet = meet(&pair).unwrap();
        let reduced = reduce_by_common_subspace(&pair, &full_meet).unwrap();
        let form = decompose(&reduced, 1e-8).unwrap();
        assert_eq!(form.d[1], 0);
    }

    #[test]
    fn reduce_by_zero_keeps_spectrum() {
        let mut rng = FixtureRng::new(71);
        let pair = random_pair(6, &mut rng);
        let z = CMatrix::zeros(6, 6);
        let reduced = reduce_by_common_subspace(&pair, &z).unwrap();
        assert_eq!(reduced.dim(), 6);
        let a = decompose(&pair, 1e-8).unwrap();
        let b = decompose(&reduced, 1e-8).unwrap();
        assert_eq!(a.d, b.d);
    }

    #[test]
    fn reduce_preserves_generic_spectrum() {
        let mut rng = FixtureRng::new(72);
        let (pair, shared) = random_pair_with_common_subspace(6, 1, &mut rng);
        let before = decompose(&pair, 1e-8).unwrap().s;
        let reduced = reduce_by_common_subspace(&pair, &shared).unwrap();
        let after = decompose(&reduced, 1e-8).unwrap().s;
        assert_eq!(before.len(), after.len());
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn reduce_rejects_non_contained_subspace() {
        let mut rng = FixtureRng::new(73);
        let pair = random_pair(6, &mut rng);
        let stray = crate::fixtures::random_projection(6, 1, &mut rng);
        let err = reduce_by_common_subspace(&pair, &stray).unwrap_err();
        assert!(matches!(err, Error::ContainmentViolation { .. }));
    }

    #[test]
    fn join_rank_formula_matches_certificate() {
        let mut rng = FixtureRng::new(74);
        for _ in 0..10 {
            let dim = rng.range(2, 10);
            let pair = random_pair(dim, &mut rng);
            let cert = span_certificate(&pair).unwrap();
            let (_, rank) = join_with_rank(&pair).unwrap();
            assert_eq!(rank, cert.rank_r);
        }
    }

    #[test]
    fn complex_pair_round_trips_through_lattice() {
        // A complex projection pair exercises the non-real path.
        let i = Complex64::new(0.0, 1.0);
        let u = CMatrix::new(
            2,
            2,
            vec![
                Complex64::new(0.6, 0.0),
                i * 0.8,
                Complex64::new(0.8, 0.0),
                i * -0.6,
            ],
        )
        .unwrap();
        let p0 = CMatrix::diag_real(&[1.0, 0.0]);
        let p = &(&u * &p0) * &u.adjoint();
        let q = quarter_pair().q().clone();
        let pair = ProjectionPair::new(p, q).unwrap();
        let a = span_projection_algebraic(&pair, None).unwrap();
        let b = join(&pair).unwrap();
        assert!(a.max_diff(&b) < 1e-9);
    }
}

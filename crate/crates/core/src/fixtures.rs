//! Deterministic fixture generators.
//!
//! Every randomized suite in the library and CLI draws from the same
//! counter-based generator so that fixtures are reproducible in any language:
//!
//! * stream: SplitMix64 (Steele-Lea-Flood constants), advancing the state by
//!   the 64-bit golden gamma `0x9E3779B97F4A7C15` per draw;
//! * uniforms: `(x >> 11) * 2^-53` in `[0, 1)`;
//! * normals: Box-Muller on two uniforms, `sqrt(-2 ln(1-u1)) * cos(2*pi*u2)`;
//! * integer ranges: modulo reduction of the raw 64-bit draw.

use num_complex::Complex64;

use crate::cmatrix::CMatrix;
use crate::halmos::{HalmosForm, ProjectionPair};

#[derive(Debug, Clone)]
pub struct FixtureRng {
    state: u64,
}

impl FixtureRng {
    pub fn new(seed: u64) -> Self {
        FixtureRng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Standard complex normal (unit total variance).
    pub fn complex_normal(&mut self) -> Complex64 {
        Complex64::new(self.normal(), self.normal()).scale(std::f64::consts::FRAC_1_SQRT_2)
    }

    /// Uniform integer in `lo..=hi`.
    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        debug_assert!(lo <= hi);
        lo + (self.next_u64() % (hi - lo + 1) as u64) as usize
    }

    /// Uniform in `(lo, hi)` open interval (rejects exact endpoints).
    pub fn open_interval(&mut self, lo: f64, hi: f64) -> f64 {
        loop {
            let x = lo + (hi - lo) * self.uniform();
            if x > lo && x < hi {
                return x;
            }
        }
    }
}

/// Modified Gram-Schmidt; columns must be independent enough to leave norms
/// above `1e-10` after projection.
pub fn orthonormalize_columns(m: &CMatrix) -> CMatrix {
    let rows = m.rows();
    let mut cols: Vec<Vec<Complex64>> = (0..m.cols()).map(|j| m.column(j)).collect();
    for j in 0..cols.len() {
        for k in 0..j {
            let inner: Complex64 = cols[k]
                .iter()
                .zip(cols[j].iter())
                .map(|(a, b)| a.conj() * b)
                .sum();
            for i in 0..rows {
                let delta = inner * cols[k][i];
                cols[j][i] -= delta;
            }
        }
        let norm: f64 = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(norm > 1e-10, "degenerate column in orthonormalization");
        for z in cols[j].iter_mut() {
            *z = *z / norm;
        }
    }
    CMatrix::from_columns(rows, &cols)
}

/// Generic unitary: Gram-Schmidt of a complex Gaussian square matrix.
pub fn random_unitary(dim: usize, rng: &mut FixtureRng) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| rng.complex_normal());
    orthonormalize_columns(&g)
}

/// Orthogonal projection onto the span of `rank` random Gaussian columns.
pub fn random_projection(dim: usize, rank: usize, rng: &mut FixtureRng) -> CMatrix {
    assert!(rank <= dim);
    if rank == 0 {
        return CMatrix::zeros(dim, dim);
    }
    let g = CMatrix::from_fn(dim, rank, |_, _| rng.complex_normal());
    let b = orthonormalize_columns(&g);
    &b * &b.adjoint()
}

/// Independent random pair with uniformly drawn ranks (0..=dim inclusive).
pub fn random_pair(dim: usize, rng: &mut FixtureRng) -> ProjectionPair {
    let rank_p = rng.range(0, dim);
    let rank_q = rng.range(0, dim);
    let p = random_projection(dim, rank_p, rng);
    let q = random_projection(dim, rank_q, rng);
    ProjectionPair::new(p, q).expect("random projections validate")
}

/// Pair in generic position on an even-dimensional space: the canonical block
/// model with random spectrum in `(margin, 1-margin)`, conjugated by a random
/// unitary.
pub fn random_generic_pair(half_dim: usize, margin: f64, rng: &mut FixtureRng) -> ProjectionPair {
    assert!(half_dim > 0 && margin > 0.0 && margin < 0.5);
    let mut s: Vec<f64> = (0..half_dim)
        .map(|_| rng.open_interval(margin, 1.0 - margin))
        .collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let form = HalmosForm::generic_model(&s);
    let u = random_unitary(2 * half_dim, rng);
    let p = &(&u * &form.model_p()) * &u.adjoint();
    let q = &(&u * &form.model_q()) * &u.adjoint();
    ProjectionPair::new(p, q).expect("model pair validates")
}

/// Random word over the generators: one to three terms, factor strings up to
/// `max_degree`, coefficients uniform in the complex square `[-2, 2]^2`.
pub fn random_word(max_degree: usize, rng: &mut FixtureRng) -> crate::dixmier::SymbolWord {
    use crate::dixmier::{Gen, SymbolWord, Term};
    let n_terms = rng.range(1, 3);
    let terms: Vec<Term> = (0..n_terms)
        .map(|_| {
            let degree = rng.range(0, max_degree);
            let factors: Vec<Gen> = (0..degree)
                .map(|_| if rng.next_u64() % 2 == 0 { Gen::P } else { Gen::Q })
                .collect();
            Term {
                coeff: Complex64::new(
                    4.0 * rng.uniform() - 2.0,
                    4.0 * rng.uniform() - 2.0,
                ),
                factors,
            }
        })
        .collect();
    SymbolWord::from_terms(terms)
}

/// Pair with a planted common subspace of dimension `common`; returns the pair
/// together with the projection onto the planted subspace.
pub fn random_pair_with_common_subspace(
    dim: usize,
    common: usize,
    rng: &mut FixtureRng,
) -> (ProjectionPair, CMatrix) {
    assert!(common < dim);
    let basis = random_unitary(dim, rng);
    let c_cols: Vec<Vec<Complex64>> = (0..common).map(|j| basis.column(j)).collect();
    let b_cols: Vec<Vec<Complex64>> = (common..dim).map(|j| basis.column(j)).collect();
    let c = CMatrix::from_columns(dim, &c_cols);
    let b = CMatrix::from_columns(dim, &b_cols);
    let rest = dim - common;
    let inner = random_pair(rest, rng);
    let shared = &c * &c.adjoint();
    let p = &shared + &(&(&b * inner.p()) * &b.adjoint());
    let q = &shared + &(&(&b * inner.q()) * &b.adjoint());
    (
        ProjectionPair::new(p, q).expect("planted pair validates"),
        shared,
    )
}

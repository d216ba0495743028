//! Polynomial-ideal experiments in the disk module.
//!
//! Ambient space: polynomials of degree at most `d` with inner product
//! `<z^a, z^a> = 1/(a+1)`. All matrices are written in the orthonormal basis
//! `e_a = sqrt(a+1) z^a`, which turns multiplication by `z` into the weighted
//! shift with subdiagonal weights `sqrt((a+1)/(a+2))`. The projection onto
//! the truncated ideal `[p]` spans `{p, zp, ..., z^{d-deg p} p}`.

use num_complex::Complex64;
use serde::Serialize;

use crate::cmatrix::CMatrix;
use crate::error::{Error, Result};
use crate::fixtures::orthonormalize_columns;
use crate::spectral::singular_values;
use crate::truncation::{Embedding, TruncFamily};

/// Dense univariate polynomial, coefficients ascending by degree, trailing
/// exact zeros stripped. The zero polynomial has an empty coefficient list.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Complex64>) -> Polynomial {
        while coeffs
            .last()
            .is_some_and(|c| c.re == 0.0 && c.im == 0.0)
        {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        if self.is_zero() || other.is_zero() {
            return Polynomial::new(Vec::new());
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Parses a comma-separated ascending coefficient list. Each entry is a
    /// complex literal: `1.5`, `-2`, `3i`, `-0.5i`, `1+2i`, `1-2i`.
    pub fn parse_list(text: &str) -> Result<Polynomial> {
        let mut coeffs = Vec::new();
        for (k, raw) in text.split(',').enumerate() {
            coeffs.push(parse_complex(raw.trim()).map_err(|message| Error::Parse {
                position: k,
                message,
            })?);
        }
        Ok(Polynomial::new(coeffs))
    }
}

fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    if s.is_empty() {
        return Err("empty coefficient".into());
    }
    if let Some(main) = s.strip_suffix('i') {
        // Either a pure imaginary literal or a+bi / a-bi.
        let bytes = main.as_bytes();
        for split in (1..bytes.len()).rev() {
            if (bytes[split] == b'+' || bytes[split] == b'-')
                && bytes[split - 1] != b'e'
                && bytes[split - 1] != b'E'
            {
                let re: f64 = main[..split]
                    .parse()
                    .map_err(|_| format!("bad real part in `{s}`"))?;
                let im_text = &main[split..];
                let im: f64 = if im_text == "+" {
                    1.0
                } else if im_text == "-" {
                    -1.0
                } else {
                    im_text.parse().map_err(|_| format!("bad imaginary part in `{s}`"))?
                };
                return Ok(Complex64::new(re, im));
            }
        }
        let im: f64 = if main.is_empty() {
            1.0
        } else if main == "-" {
            -1.0
        } else {
            main.parse().map_err(|_| format!("bad imaginary literal `{s}`"))?
        };
        return Ok(Complex64::new(0.0, im));
    }
    let re: f64 = s.parse().map_err(|_| format!("bad coefficient `{s}`"))?;
    Ok(Complex64::new(re, 0.0))
}

/// The truncated ideal `[p]` at degree cap `d`, carrying its projection.
#[derive(Debug, Clone, Serialize)]
pub struct IdealModel {
    #[serde(skip)]
    pub poly: Polynomial,
    pub degree_cap: usize,
    pub projection: CMatrix,
}

impl IdealModel {
    pub fn new(poly: &Polynomial, degree_cap: usize) -> Result<IdealModel> {
        let projection = ideal_projection(poly, degree_cap)?;
        Ok(IdealModel {
            poly: poly.clone(),
            degree_cap,
            projection,
        })
    }

    pub fn rank(&self) -> usize {
        self.degree_cap + 1 - self.poly.degree().expect("nonzero by construction")
    }
}

/// Coordinates of `z^k p` in the normalized basis of the degree-`d` space.
fn shifted_poly_column(p: &Polynomial, k: usize, d: usize) -> Vec<Complex64> {
    let mut col = vec![Complex64::new(0.0, 0.0); d + 1];
    for (a, &c) in p.coeffs().iter().enumerate() {
        let m = a + k;
        col[m] = c / ((m + 1) as f64).sqrt();
    }
    col
}

/// Orthogonal projection onto `span{p, zp, ..., z^{d-deg p} p}` in the
/// normalized basis; rank is exactly `d + 1 - deg p`.
pub fn ideal_projection(p: &Polynomial, d: usize) -> Result<CMatrix> {
    let deg = match p.degree() {
        Some(deg) => deg,
        None => return Err(Error::ZeroPolynomial),
    };
    if deg > d {
        return Err(Error::DegreeOverflow { degree: deg, cap: d });
    }
    let columns: Vec<Vec<Complex64>> = (0..=d - deg)
        .map(|k| shifted_poly_column(p, k, d))
        .collect();
    let raw = CMatrix::from_columns(d + 1, &columns);
    let basis = orthonormalize_columns(&raw);
    Ok(&basis * &basis.adjoint())
}

/// Multiplication by `z` truncated at degree `d`: the weighted shift with
/// subdiagonal entries `sqrt((a+1)/(a+2))`.
pub fn toeplitz_z(d: usize) -> CMatrix {
    CMatrix::from_fn(d + 1, d + 1, |i, j| {
        if i == j + 1 {
            let a = j as f64;
            Complex64::new(((a + 1.0) / (a + 2.0)).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Family `d -> Q_p` over the given degree caps (the ambient basis grows, so
/// there is no compression identity).
pub fn ideal_family(p: &Polynomial, dims: Vec<usize>) -> Result<TruncFamily> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let poly = p.clone();
    TruncFamily::new(
        format!("ideal[{:?}]", poly.coeffs().len()),
        dims,
        Embedding::GrowingBasis,
        move |d| ideal_projection(&poly, d).expect("degree checked at realization"),
    )
}

/// Family `d -> I - Q_p`, the quotient-side projection.
pub fn quotient_family(p: &Polynomial, dims: Vec<usize>) -> Result<TruncFamily> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let poly = p.clone();
    TruncFamily::new(
        "ideal-quotient",
        dims,
        Embedding::GrowingBasis,
        move |d| {
            let q = ideal_projection(&poly, d).expect("degree checked at realization");
            &CMatrix::identity(d + 1) - &q
        },
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct IdealRow {
    pub d: usize,
    /// `|[T_z, Q]|` where `Q` projects onto `[p]` (or `[pr]`).
    pub shift_comm_norm: f64,
    /// Schatten norms of `[T_z, Q]`, aligned with the requested list.
    pub schatten: Vec<f64>,
    /// `|[Q_p, Q_q]|` (or `|[Q_pr, Q_qr]|`) when a second ideal is given.
    pub cross_comm_norm: Option<f64>,
}

/// Per-degree commutator profile for ideal projections: decay in `d` is the
/// desk-scale signature of the compact commutators predicted for circle-
/// disjoint zero sets.
pub fn ideal_commutator_profile(
    p: &Polynomial,
    q: Option<&Polynomial>,
    r: Option<&Polynomial>,
    d_list: &[usize],
    p_list: &[f64],
) -> Result<Vec<IdealRow>> {
    if p.is_zero() || q.is_some_and(Polynomial::is_zero) || r.is_some_and(Polynomial::is_zero) {
        return Err(Error::ZeroPolynomial);
    }
    let left = match r {
        Some(r) => p.mul(r),
        None => p.clone(),
    };
    let right = q.map(|q| match r {
        Some(r) => q.mul(r),
        None => q.clone(),
    });
    let max_deg = left
        .degree()
        .unwrap()
        .max(right.as_ref().and_then(Polynomial::degree).unwrap_or(0));
    if let Some(&d) = d_list.iter().find(|&&d| d < max_deg) {
        return Err(Error::DegreeOverflow {
            degree: max_deg,
            cap: d,
        });
    }
    let mut rows = Vec::with_capacity(d_list.len());
    for &d in d_list {
        let qp = ideal_projection(&left, d)?;
        let tz = toeplitz_z(d);
        let comm = &(&tz * &qp) - &(&qp * &tz);
        let sv = singular_values(&comm)?;
        let shift_comm_norm = sv.first().copied().unwrap_or(0.0);
        let schatten = p_list
            .iter()
            .map(|&p| sv.iter().map(|s| s.powf(p)).sum::<f64>().powf(1.0 / p))
            .collect();
        let cross_comm_norm = match &right {
            Some(rq) => {
                let qq = ideal_projection(rq, d)?;
                let cross = &(&qp * &qq) - &(&qq * &qp);
                Some(singular_values(&cross)?.first().copied().unwrap_or(0.0))
            }
            None => None,
        };
        rows.push(IdealRow {
            d,
            shift_comm_norm,
            schatten,
            cross_comm_norm,
        });
    }
    Ok(rows)
}

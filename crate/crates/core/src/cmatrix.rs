//! Dense complex matrices in row-major order.
//!
//! `CMatrix` is the universal carrier for operators, projections and basis
//! blocks. The on-disk format is JSON: `{"rows": n, "cols": m, "re": [[..]],
//! "im": [[..]]}` with `im` omitted for real matrices.

use std::fmt;
use std::ops::{Add, Index, Mul, Sub};
use std::path::Path;

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    /// Validating constructor for externally sourced data.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::EntryCount {
                rows,
                cols,
                found: data.len(),
            });
        }
        for (k, z) in data.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite {
                    row: if cols > 0 { k / cols } else { 0 },
                    col: if cols > 0 { k % cols } else { 0 },
                });
            }
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let n = values.len();
        CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(values[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        CMatrix::new(
            rows,
            cols,
            entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Side length of a square matrix; panics on rectangular input.
    pub fn dim(&self) -> usize {
        assert!(self.is_square(), "dim() on {}x{} matrix", self.rows, self.cols);
        self.rows
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        let c = self.cols;
        self.data[i * c + j] = value;
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, factor: Complex64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_re(&self, factor: f64) -> CMatrix {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square(), "trace of non-square matrix");
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Max-norm: largest entry modulus.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |A - A*|` entrywise.
    pub fn hermitian_residual(&self) -> f64 {
        assert!(self.is_square(), "hermitian residual of non-square matrix");
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..=i {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Largest entrywise deviation from another matrix of the same shape.
    pub fn max_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "max_diff of mismatched shapes"
        );
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Hermitian part `(A + A*)/2`.
    pub fn hermitian_part(&self) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn from_columns(rows: usize, columns: &[Vec<Complex64>]) -> CMatrix {
        CMatrix::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    /// Horizontal concatenation of column blocks (all with `self.rows` rows).
    pub fn hstack(blocks: &[&CMatrix]) -> CMatrix {
        assert!(!blocks.is_empty(), "hstack of nothing");
        let rows = blocks[0].rows;
        let cols: usize = blocks.iter().map(|b| b.cols).sum();
        let mut m = CMatrix::zeros(rows, cols);
        let mut off = 0;
        for b in blocks {
            assert_eq!(b.rows, rows, "hstack row mismatch");
            for i in 0..rows {
                for j in 0..b.cols {
                    m[(i, off + j)] = b[(i, j)];
                }
            }
            off += b.cols;
        }
        m
    }

    /// Leading principal `n x n` compression.
    pub fn leading_principal(&self, n: usize) -> CMatrix {
        assert!(n <= self.rows && n <= self.cols, "compression too large");
        CMatrix::from_fn(n, n, |i, j| self[(i, j)])
    }

    /// Pads a square matrix to `dim` with zeros in the trailing block.
    pub fn pad_to(&self, dim: usize) -> CMatrix {
        assert!(self.is_square() && dim >= self.rows, "pad_to misuse");
        let k = self.rows;
        CMatrix::from_fn(dim, dim, |i, j| {
            if i < k && j < k {
                self[(i, j)]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Embeds a square matrix as the leading block of `I_dim` (identity elsewhere).
    pub fn embed_in_identity(&self, dim: usize) -> CMatrix {
        assert!(self.is_square() && dim >= self.rows, "embed misuse");
        let k = self.rows;
        CMatrix::from_fn(dim, dim, |i, j| {
            if i < k && j < k {
                self[(i, j)]
            } else if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    fn mul_impl(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(
            self.cols, rhs.rows,
            "matrix product shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let (n, k, m) = (self.rows, self.cols, rhs.cols);
        let mut out = vec![Complex64::new(0.0, 0.0); n * m];
        for i in 0..n {
            for p in 0..k {
                let a = self.data[i * k + p];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row = &rhs.data[p * m..(p + 1) * m];
                let dst = &mut out[i * m..(i + 1) * m];
                for j in 0..m {
                    dst[j] += a * row[j];
                }
            }
        }
        CMatrix {
            rows: n,
            cols: m,
            data: out,
        }
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<CMatrix> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.mul_impl(rhs)
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sum shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "difference shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            for j in 0..self.cols.min(8) {
                let z = self[(i, j)];
                write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        if self.rows > 8 || self.cols > 8 {
            writeln!(f, " ...")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    re: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    im: Option<Vec<Vec<f64>>>,
}

impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let re: Vec<Vec<f64>> = (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)].re).collect())
            .collect();
        let has_im = self.data.iter().any(|z| z.im != 0.0);
        let im = has_im.then(|| {
            (0..self.rows)
                .map(|i| (0..self.cols).map(|j| self[(i, j)].im).collect())
                .collect()
        });
        MatrixRepr {
            rows: self.rows,
            cols: self.cols,
            re,
            im,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(deserializer)?;
        let check_shape = |name: &str, grid: &Vec<Vec<f64>>| {
            if grid.len() != repr.rows {
                return Err(D::Error::custom(format!(
                    "field `{name}` has {} rows, header says {}",
                    grid.len(),
                    repr.rows
                )));
            }
            for (i, row) in grid.iter().enumerate() {
                if row.len() != repr.cols {
                    return Err(D::Error::custom(format!(
                        "field `{name}` row {i} has {} entries, header says {}",
                        row.len(),
                        repr.cols
                    )));
                }
            }
            Ok(())
        };
        check_shape("re", &repr.re)?;
        if let Some(im) = &repr.im {
            check_shape("im", im)?;
        }
        let mut data = Vec::with_capacity(repr.rows * repr.cols);
        for i in 0..repr.rows {
            for j in 0..repr.cols {
                let re = repr.re[i][j];
                let im = repr.im.as_ref().map_or(0.0, |g| g[i][j]);
                data.push(Complex64::new(re, im));
            }
        }
        CMatrix::new(repr.rows, repr.cols, data).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_against_hand_computation() {
        let a = CMatrix::from_real(2, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = CMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let c = &a * &b;
        assert_eq!(c[(0, 0)].re, 2.0);
        assert_eq!(c[(0, 1)].re, 1.0);
        assert_eq!(c[(1, 0)].re, 4.0);
        assert_eq!(c[(1, 1)].re, 3.0);
    }

    #[test]
    fn adjoint_conjugates() {
        let m = CMatrix::new(
            1,
            2,
            vec![Complex64::new(1.0, 2.0), Complex64::new(0.0, -1.0)],
        )
        .unwrap();
        let a = m.adjoint();
        assert_eq!(a.rows(), 2);
        assert_eq!(a[(0, 0)], Complex64::new(1.0, -2.0));
        assert_eq!(a[(1, 0)], Complex64::new(0.0, 1.0));
    }

    #[test]
    fn json_real_matrix_omits_im() {
        let m = CMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.5]).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        assert!(!text.contains("\"im\""));
        let back: CMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn json_rejects_shape_mismatch() {
        let text = r#"{"rows":2,"cols":2,"re":[[1.0,0.0]]}"#;
        assert!(serde_json::from_str::<CMatrix>(&text).is_err());
    }

    #[test]
    fn json_rejects_nan() {
        let m = serde_json::from_str::<CMatrix>(r#"{"rows":1,"cols":1,"re":[[null]]}"#);
        assert!(m.is_err());
    }

    #[test]
    fn constructor_rejects_wrong_count() {
        let err = CMatrix::new(2, 2, vec![Complex64::new(1.0, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::EntryCount { found: 1, .. }));
    }
}

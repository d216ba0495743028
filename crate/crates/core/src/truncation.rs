//! Truncation families: nested finite sections standing in for operators on
//! an infinite-dimensional space.
//!
//! Compactness has no finite-dimensional definition, so the module commits to
//! falsifiable surrogates: a growing-index singular value probe (a fixed
//! index converges to the limit operator's singular value and cannot separate
//! compact from non-compact on its own), and eigenvalue-count slopes per
//! spectral cell for essential-spectrum estimates. All thresholds live in
//! configuration records with stated defaults.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use serde::Serialize;

use crate::cmatrix::CMatrix;
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::halmos::ProjectionPair;
use crate::spectral::{hermitian_eig, singular_values, spectral_projection_from_eig};

/// How the realization at one size sits inside the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Embedding {
    /// The smaller matrix is the leading principal compression of the larger,
    /// bit for bit.
    LeadingPrincipal,
    /// The ambient basis grows with the parameter; no compression identity.
    GrowingBasis,
}

/// A sequence of operators indexed by a family parameter, realized lazily and
/// cached per parameter. The realization cache behaves as a single-writer-
/// per-key map with shared reads.
pub struct TruncFamily {
    name: String,
    dims: Vec<usize>,
    embedding: Embedding,
    gen: Arc<dyn Fn(usize) -> CMatrix + Send + Sync>,
    cache: Mutex<HashMap<usize, Arc<CMatrix>>>,
}

impl std::fmt::Debug for TruncFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TruncFamily")
            .field("name", &self.name)
            .field("dims", &self.dims)
            .field("embedding", &self.embedding)
            .finish()
    }
}

impl TruncFamily {
    pub fn new(
        name: impl Into<String>,
        dims: Vec<usize>,
        embedding: Embedding,
        gen: impl Fn(usize) -> CMatrix + Send + Sync + 'static,
    ) -> Result<Self> {
        if dims.is_empty() || dims.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "family dims must be a nonempty strictly increasing list",
            ));
        }
        Ok(TruncFamily {
            name: name.into(),
            dims,
            embedding,
            gen: Arc::new(gen),
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn embedding(&self) -> Embedding {
        self.embedding
    }

    pub fn realize(&self, param: usize) -> Arc<CMatrix> {
        if let Some(hit) = self.cache.lock().unwrap().get(&param) {
            return hit.clone();
        }
        let made = Arc::new((self.gen)(param));
        let mut cache = self.cache.lock().unwrap();
        cache.entry(param).or_insert(made).clone()
    }

    /// Checks the nesting invariant on the given parameters: the realization
    /// at a smaller parameter must equal the leading principal compression of
    /// every larger one, bit for bit. Growing-basis families pass vacuously.
    pub fn verify_nested(&self, params: &[usize]) -> Result<()> {
        if self.embedding != Embedding::LeadingPrincipal {
            return Ok(());
        }
        for w in params.windows(2) {
            let small = self.realize(w[0]);
            let large = self.realize(w[1]);
            let compressed = large.leading_principal(small.rows());
            if compressed != *small {
                return Err(Error::invalid(format!(
                    "family `{}` is not nested between params {} and {}",
                    self.name, w[0], w[1]
                )));
            }
        }
        Ok(())
    }

    /// Derived family applying `f` to the realizations of `self` (same
    /// parameter semantics). Nestedness is preserved only when `f` is
    /// entrywise-local; callers declare the embedding accordingly.
    pub fn map(
        self: &Arc<Self>,
        name: impl Into<String>,
        embedding: Embedding,
        f: impl Fn(&CMatrix) -> CMatrix + Send + Sync + 'static,
    ) -> Result<TruncFamily> {
        let src = self.clone();
        TruncFamily::new(name, self.dims.clone(), embedding, move |n| {
            f(&src.realize(n))
        })
    }
}

/// Two projection-valued families over shared parameters.
#[derive(Debug)]
pub struct PairFamily {
    pub name: String,
    pub p: Arc<TruncFamily>,
    pub q: Arc<TruncFamily>,
}

impl PairFamily {
    pub fn pair_at(&self, param: usize) -> Result<ProjectionPair> {
        let p = self.p.realize(param);
        let q = self.q.realize(param);
        ProjectionPair::new((*p).clone(), (*q).clone())
    }

    /// The family `n -> P_n + Q_n`.
    pub fn sum_family(&self) -> Result<TruncFamily> {
        let p = self.p.clone();
        let q = self.q.clone();
        let embedding = if p.embedding == Embedding::LeadingPrincipal
            && q.embedding == Embedding::LeadingPrincipal
        {
            Embedding::LeadingPrincipal
        } else {
            Embedding::GrowingBasis
        };
        TruncFamily::new(
            format!("{}+sum", self.name),
            self.p.dims().to_vec(),
            embedding,
            move |n| (&*p.realize(n) + &*q.realize(n)).hermitian_part(),
        )
    }
}

/// Built-in pair families for the CLI and the regression zoo.
///
/// * `paper-l2`: the block pair with generic spectrum `n^2/(n^2+1)` at
///   parameter `N` (matrix dimension `2N`); its span gap decays like
///   `1/(N^2+1)`.
/// * `orthogonal`: ranges on even vs odd coordinates.
/// * `aligned`: `P = Q` on the even coordinates.
/// * `quarter-blocks`: four generic blocks at `s = 1/4`, aligned beyond.
pub fn builtin_pair(name: &str, dims: Vec<usize>) -> Result<PairFamily> {
    match name {
        "paper-l2" => {
            let p = TruncFamily::new("paper-l2:P", dims.clone(), Embedding::LeadingPrincipal, |n| {
                paper_p_matrix(n)
            })?;
            let q = TruncFamily::new("paper-l2:Q", dims, Embedding::LeadingPrincipal, |n| {
                paper_q_matrix(n)
            })?;
            Ok(PairFamily {
                name: "paper-l2".into(),
                p: Arc::new(p),
                q: Arc::new(q),
            })
        }
        "orthogonal" => {
            let p = TruncFamily::new("orthogonal:P", dims.clone(), Embedding::LeadingPrincipal, |n| {
                CMatrix::from_fn(n, n, |i, j| indicator(i == j && i % 2 == 0))
            })?;
            let q = TruncFamily::new("orthogonal:Q", dims, Embedding::LeadingPrincipal, |n| {
                CMatrix::from_fn(n, n, |i, j| indicator(i == j && i % 2 == 1))
            })?;
            Ok(PairFamily {
                name: "orthogonal".into(),
                p: Arc::new(p),
                q: Arc::new(q),
            })
        }
        "aligned" => {
            let half = |n: usize| CMatrix::from_fn(n, n, |i, j| indicator(i == j && i % 2 == 0));
            let p = TruncFamily::new("aligned:P", dims.clone(), Embedding::LeadingPrincipal, half)?;
            let q = TruncFamily::new("aligned:Q", dims, Embedding::LeadingPrincipal, half)?;
            Ok(PairFamily {
                name: "aligned".into(),
                p: Arc::new(p),
                q: Arc::new(q),
            })
        }
        "quarter-blocks" => {
            let p = TruncFamily::new(
                "quarter-blocks:P",
                dims.clone(),
                Embedding::LeadingPrincipal,
                |n| paper_p_matrix(n),
            )?;
            let q = TruncFamily::new("quarter-blocks:Q", dims, Embedding::LeadingPrincipal, |n| {
                quarter_blocks_q_matrix(n)
            })?;
            Ok(PairFamily {
                name: "quarter-blocks".into(),
                p: Arc::new(p),
                q: Arc::new(q),
            })
        }
        other => Err(Error::UnknownFamily { name: other.into() }),
    }
}

fn indicator(cond: bool) -> Complex64 {
    Complex64::new(if cond { 1.0 } else { 0.0 }, 0.0)
}

/// `P` of the block pair at parameter `N`: the first coordinate of each of
/// the `N` two-dimensional blocks.
fn paper_p_matrix(big_n: usize) -> CMatrix {
    let dim = 2 * big_n;
    CMatrix::from_fn(dim, dim, |i, j| indicator(i == j && i % 2 == 0))
}

/// `Q` of the block pair: block `n` (1-based) carries the rank-one projection
/// onto `(e_n + e_n/n)/sqrt(1 + 1/n^2)`, giving `s_n = n^2/(n^2+1)` exactly.
fn paper_q_matrix(big_n: usize) -> CMatrix {
    let dim = 2 * big_n;
    CMatrix::from_fn(dim, dim, |i, j| {
        if i / 2 != j / 2 {
            return Complex64::new(0.0, 0.0);
        }
        let n = (i / 2 + 1) as f64;
        let denom = n * n + 1.0;
        let value = match (i % 2, j % 2) {
            (0, 0) => n * n / denom,
            (1, 1) => 1.0 / denom,
            _ => n / denom,
        };
        Complex64::new(value, 0.0)
    })
}

/// Four generic blocks at `s = 1/4`; every later block aligns `Q` with `P`.
fn quarter_blocks_q_matrix(big_n: usize) -> CMatrix {
    let dim = 2 * big_n;
    let x = (3.0f64).sqrt() / 4.0;
    CMatrix::from_fn(dim, dim, |i, j| {
        if i / 2 != j / 2 {
            return Complex64::new(0.0, 0.0);
        }
        if i / 2 < 4 {
            let value = match (i % 2, j % 2) {
                (0, 0) => 0.25,
                (1, 1) => 0.75,
                _ => x,
            };
            Complex64::new(value, 0.0)
        } else {
            indicator(i == j && i % 2 == 0)
        }
    })
}

/// The block pair at parameter `N` as a concrete `ProjectionPair` (dimension
/// `2N`, generic spectrum `s_n = n^2/(n^2+1)`).
pub fn paper_example_pair(big_n: usize) -> Result<ProjectionPair> {
    if big_n == 0 {
        return Err(Error::invalid("block pair needs N >= 1"));
    }
    ProjectionPair::new(paper_p_matrix(big_n), paper_q_matrix(big_n))
}

// --- commutator tables ------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CommutatorRow {
    pub param: usize,
    pub dim: usize,
    pub op_norm: f64,
    /// Schatten norms aligned with the requested `p_list`.
    pub schatten: Vec<f64>,
}

/// Per-parameter operator and Schatten norms of `[A_n, B_n]`.
pub fn commutator_norms(
    a: &TruncFamily,
    b: &TruncFamily,
    params: &[usize],
    p_list: &[f64],
) -> Result<Vec<CommutatorRow>> {
    if let Some(&p) = p_list.iter().find(|&&p| p < 1.0) {
        return Err(Error::invalid(format!("Schatten p must be >= 1, got {p}")));
    }
    let mut rows = Vec::with_capacity(params.len());
    for &param in params {
        let an = a.realize(param);
        let bn = b.realize(param);
        if an.rows() != bn.rows() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "families `{}` and `{}` disagree at param {param}: {} vs {}",
                    a.name(),
                    b.name(),
                    an.rows(),
                    bn.rows()
                ),
            });
        }
        let comm = &(&*an * &*bn) - &(&*bn * &*an);
        let sv = singular_values(&comm)?;
        let op_norm = sv.first().copied().unwrap_or(0.0);
        let schatten = p_list
            .iter()
            .map(|&p| sv.iter().map(|s| s.powf(p)).sum::<f64>().powf(1.0 / p))
            .collect();
        rows.push(CommutatorRow {
            param,
            dim: an.rows(),
            op_norm,
            schatten,
        });
    }
    Ok(rows)
}

// --- compactness surrogate ---------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CompactnessConfig {
    /// Fixed singular-value probe indices (1-based).
    pub probes: Vec<usize>,
    /// Growing-probe tail below this is decisively compact-like.
    pub compact_abs: f64,
    /// Growing-probe tail at or above this with a flat slope is
    /// non-compact-like.
    pub noncompact_abs: f64,
    /// Log-log slope at or below this counts as decaying.
    pub slope_compact: f64,
    /// Log-log slope above this counts as flat.
    pub slope_flat: f64,
}

impl Default for CompactnessConfig {
    fn default() -> Self {
        CompactnessConfig {
            probes: vec![1, 4, 16],
            compact_abs: 1e-6,
            noncompact_abs: 1e-3,
            slope_compact: -0.5,
            slope_flat: -0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DecayVerdict {
    CompactLike,
    NonCompactLike,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeRow {
    pub param: usize,
    pub dim: usize,
    /// Fixed-index singular values aligned with `config.probes`.
    pub fixed: Vec<f64>,
    /// Growing probe `sigma_ceil(dim/2)`.
    pub growing: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompactnessProfile {
    pub rows: Vec<ProbeRow>,
    pub verdict: DecayVerdict,
    /// Least-squares slope of `ln growing` against `ln dim`.
    pub slope: f64,
}

/// Decay analysis of a family's singular values.
///
/// A fixed probe index converges to the limit operator's singular value, so
/// only the growing probe `k = ceil(dim/2)` separates compact-like from
/// non-compact-like: its decay (or a tail below `compact_abs`) is the
/// compactness surrogate.
pub fn compactness_indicator(
    family: &TruncFamily,
    params: &[usize],
    config: &CompactnessConfig,
) -> Result<CompactnessProfile> {
    if params.len() < 4 {
        return Err(Error::InsufficientFamily {
            needed: 4,
            got: params.len(),
        });
    }
    let mut rows = Vec::with_capacity(params.len());
    for &param in params {
        let m = family.realize(param);
        let sv = singular_values(&m)?;
        let pick = |k: usize| {
            if k >= 1 && k <= sv.len() {
                sv[k - 1]
            } else {
                0.0
            }
        };
        let dim = m.rows();
        rows.push(ProbeRow {
            param,
            dim,
            fixed: config.probes.iter().map(|&k| pick(k)).collect(),
            growing: pick(dim.div_ceil(2)),
        });
    }
    let growing: Vec<f64> = rows.iter().map(|r| r.growing).collect();
    let dims: Vec<f64> = rows.iter().map(|r| r.dim as f64).collect();
    let slope = log_log_slope(&dims, &growing);
    let tail = &growing[growing.len() - 3..];
    let verdict = if tail.iter().all(|&g| g < config.compact_abs) {
        DecayVerdict::CompactLike
    } else if tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)) && slope <= config.slope_compact
    {
        DecayVerdict::CompactLike
    } else if *growing.last().unwrap() >= config.noncompact_abs && slope >= config.slope_flat {
        DecayVerdict::NonCompactLike
    } else {
        DecayVerdict::Inconclusive
    };
    Ok(CompactnessProfile {
        rows,
        verdict,
        slope,
    })
}

/// Least-squares slope of `ln y` vs `ln x`, with `y` floored at 1e-300.
fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|&v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|&v| v.max(1e-300).ln()).collect();
    slope(&lx, &ly)
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if var == 0.0 {
        0.0
    } else {
        cov / var
    }
}

// --- essential spectrum estimate ---------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CellVerdict {
    /// Eigenvalue counts grow at least linearly with dimension.
    Essential,
    /// Counts stabilized over the last three parameters.
    Discrete,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct EssentialSpectrumEstimate {
    pub upper: f64,
    pub cells: usize,
    pub params: Vec<usize>,
    pub dims: Vec<usize>,
    /// `counts[i][c]` = eigenvalues of the realization at `params[i]` in cell `c`.
    pub counts: Vec<Vec<usize>>,
    pub verdicts: Vec<CellVerdict>,
    /// Count-vs-dim least squares slope per cell.
    pub slopes: Vec<f64>,
}

impl EssentialSpectrumEstimate {
    pub fn cell_bounds(&self, cell: usize) -> (f64, f64) {
        let width = self.upper / self.cells as f64;
        (cell as f64 * width, (cell + 1) as f64 * width)
    }

    /// Cells marked essential that intersect the open interval `(0, hi)`.
    pub fn essential_cells_in(&self, hi: f64) -> Vec<usize> {
        (0..self.cells)
            .filter(|&c| {
                let (lo, cell_hi) = self.cell_bounds(c);
                self.verdicts[c] == CellVerdict::Essential && lo < hi && cell_hi > 0.0
            })
            .collect()
    }
}

/// Histograms the spectra of a Hermitian family over `[0, upper]` and flags
/// cells whose counts grow with the dimension (slope > 0.1) as essential.
/// Eigenvalues below zero are clamped into the first cell; the family is
/// expected to be positive up to roundoff.
pub fn essential_spectrum_estimate(
    family: &TruncFamily,
    params: &[usize],
    cells: usize,
) -> Result<EssentialSpectrumEstimate> {
    if params.len() < 4 {
        return Err(Error::InsufficientFamily {
            needed: 4,
            got: params.len(),
        });
    }
    if cells == 0 {
        return Err(Error::invalid("grid resolution must be positive"));
    }
    let mut spectra = Vec::with_capacity(params.len());
    let mut dims = Vec::with_capacity(params.len());
    let mut upper = 0.0f64;
    for &param in params {
        let m = family.realize(param);
        let eig = hermitian_eig(&m.hermitian_part())?;
        upper = upper.max(eig.values.last().copied().unwrap_or(0.0));
        dims.push(m.rows());
        spectra.push(eig.values);
    }
    // Nudge the top so the max eigenvalue lands inside the last cell.
    let upper = if upper <= 0.0 { 1.0 } else { upper * (1.0 + 1e-12) };
    let width = upper / cells as f64;
    let counts: Vec<Vec<usize>> = spectra
        .iter()
        .map(|values| {
            let mut row = vec![0usize; cells];
            for &v in values {
                let cell = ((v / width).floor().max(0.0) as usize).min(cells - 1);
                row[cell] += 1;
            }
            row
        })
        .collect();
    let dims_f: Vec<f64> = dims.iter().map(|&d| d as f64).collect();
    let mut verdicts = Vec::with_capacity(cells);
    let mut slopes = Vec::with_capacity(cells);
    for c in 0..cells {
        let ys: Vec<f64> = counts.iter().map(|row| row[c] as f64).collect();
        let m = slope(&dims_f, &ys);
        slopes.push(m);
        let tail = &ys[ys.len() - 3..];
        let verdict = if m > 0.1 {
            CellVerdict::Essential
        } else if tail.windows(2).all(|w| w[0] == w[1]) {
            CellVerdict::Discrete
        } else {
            CellVerdict::Inconclusive
        };
        verdicts.push(verdict);
    }
    Ok(EssentialSpectrumEstimate {
        upper,
        cells,
        params: params.to_vec(),
        dims,
        counts,
        verdicts,
        slopes,
    })
}

// --- essential span ------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct EssentialSpanRow {
    pub param: usize,
    pub dim: usize,
    pub rank_join: usize,
    pub rank_essential: usize,
    /// `rank_join - rank_essential`.
    pub delta: i64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EssentialSpanReport {
    pub epsilon: f64,
    pub rows: Vec<EssentialSpanRow>,
    /// Set when `(0, epsilon)` is not essential-free for `P + Q`.
    pub warning: Option<String>,
}

/// Compares the essential-span surrogate `1_[eps,2](P_n + Q_n)` against the
/// full join. Bounded rank difference across the family is the closed-span
/// signature; growing difference is the non-closed one.
///
/// A warning is attached when eigenvalue counts in the open interval between
/// the zero cluster and `epsilon` grow with the dimension (slope > 0.1): that
/// is essential mass inside `(0, epsilon)`, where the surrogate is unsound.
/// The exact kernel of `P + Q` does not count against the window.
pub fn essential_span(
    pair: &PairFamily,
    params: &[usize],
    epsilon: f64,
) -> Result<EssentialSpanReport> {
    if !(epsilon > 0.0 && epsilon < 2.0) {
        return Err(Error::InvalidWindow {
            lo: epsilon,
            hi: 2.0,
        });
    }
    let sum_family = pair.sum_family()?;
    let mut rows = Vec::with_capacity(params.len());
    let mut window_counts = Vec::with_capacity(params.len());
    for &param in params {
        let sum = sum_family.realize(param);
        let eig = hermitian_eig(&sum)?;
        let norm = eig.spectral_norm();
        let cluster = Tolerances::DEFAULT.zero_cluster * norm.max(1.0);
        window_counts.push(
            eig.values
                .iter()
                .filter(|&&v| v > cluster && v < epsilon)
                .count() as f64,
        );
        let (_, rank_join) = crate::lattice::join_from_sum_eig(&eig)?;
        let (_, rank_essential) = spectral_projection_from_eig(&eig, epsilon, 2.0)?;
        rows.push(EssentialSpanRow {
            param,
            dim: sum.rows(),
            rank_join,
            rank_essential,
            delta: rank_join as i64 - rank_essential as i64,
        });
    }
    let warning = if params.len() >= 4 {
        let dims_f: Vec<f64> = rows.iter().map(|r| r.dim as f64).collect();
        let m = slope(&dims_f, &window_counts);
        (m > 0.1).then(|| {
            format!(
                "eigenvalue counts in (0, {epsilon}) grow with dimension (slope {m:.3}); \
                 the essential-span cut is not essential-free"
            )
        })
    } else {
        None
    };
    Ok(EssentialSpanReport {
        epsilon,
        rows,
        warning,
    })
}

/// Per-parameter lattice summary used by the CLI family sweep: commutator
/// norms plus gap and rank columns.
#[derive(Debug, Clone, Serialize)]
pub struct FamilySweepRow {
    pub param: usize,
    pub dim: usize,
    pub comm_norm: f64,
    pub schatten: Vec<f64>,
    pub gap_to_one: f64,
    pub rank_join: usize,
    pub rank_ess_span: usize,
    pub delta: i64,
}

pub fn family_sweep(
    pair: &PairFamily,
    params: &[usize],
    epsilon: f64,
    p_list: &[f64],
) -> Result<Vec<FamilySweepRow>> {
    let comm = commutator_norms(&pair.p, &pair.q, params, p_list)?;
    let span = essential_span(pair, params, epsilon)?;
    let mut rows = Vec::with_capacity(params.len());
    for (c, s) in comm.into_iter().zip(span.rows) {
        let concrete = pair.pair_at(c.param)?;
        let cert = crate::lattice::span_certificate(&concrete)?;
        rows.push(FamilySweepRow {
            param: c.param,
            dim: c.dim,
            comm_norm: c.op_norm,
            schatten: c.schatten,
            gap_to_one: cert.gap_to_one,
            rank_join: s.rank_join,
            rank_ess_span: s.rank_essential,
            delta: s.delta,
        });
    }
    Ok(rows)
}

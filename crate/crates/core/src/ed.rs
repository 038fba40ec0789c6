//! Dense exact diagonalization of short chains built from a local projector.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, c, CMatrix, LinalgError, SortMode, C64};
use crate::mps::{MpsError, StatePair};
use crate::parent::{build_projector, LocalProjector, ParentError};

/// Largest Hilbert-space dimension accepted by [`build_chain`].
pub const CHAIN_CAP: usize = 6_561;
/// Largest Hilbert-space dimension accepted by [`obc_similarity_check`].
pub const SIMILARITY_CAP: usize = 2_187;
/// Absolute complex distance used to group degenerate eigenvalues.
pub const CLUSTER_TOL: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum EdError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("Hilbert space dimension {requested} exceeds cap {cap}")]
    SizeCap { requested: usize, cap: usize },
    #[error(transparent)]
    Parent(#[from] ParentError),
    #[error(transparent)]
    Mps(#[from] MpsError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, EdError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainBoundary {
    Open,
    Periodic,
}

impl ChainBoundary {
    pub fn label(self) -> &'static str {
        match self {
            ChainBoundary::Open => "open",
            ChainBoundary::Periodic => "periodic",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChainHamiltonian {
    pub n_sites: usize,
    pub k: usize,
    pub d: usize,
    pub boundary: ChainBoundary,
    pub matrix: CMatrix,
}

fn capped_dim(d: usize, n: usize, cap: usize) -> Result<usize> {
    d.checked_pow(n as u32)
        .filter(|&s| s <= cap)
        .ok_or(EdError::SizeCap {
            requested: d.saturating_pow(n as u32),
            cap,
        })
}

/// `H = Σ_i Π_i` on `n` sites, site 1 slowest in the basis ordering.
pub fn build_chain(
    p: &LocalProjector,
    n: usize,
    boundary: ChainBoundary,
) -> Result<ChainHamiltonian> {
    let (d, k) = (p.d, p.k);
    if n < k {
        return Err(EdError::InvalidParameter(format!(
            "chain of {n} sites is shorter than the interaction span {k}"
        )));
    }
    let dim = capped_dim(d, n, CHAIN_CAP)?;
    let starts = match boundary {
        ChainBoundary::Open => n - k + 1,
        ChainBoundary::Periodic => n,
    };
    let stride: Vec<usize> = (0..n).map(|s| d.pow((n - 1 - s) as u32)).collect();
    let local = p.dim();
    let mut h = CMatrix::zeros((dim, dim));
    let mut digits = vec![0usize; n];
    for start in 0..starts {
        let sites: Vec<usize> = (0..k).map(|j| (start + j) % n).collect();
        for col in 0..dim {
            for (s, digit) in digits.iter_mut().enumerate() {
                *digit = (col / stride[s]) % d;
            }
            let mut lc = 0;
            let mut base = col;
            for &s in &sites {
                lc = lc * d + digits[s];
                base -= digits[s] * stride[s];
            }
            for lr in 0..local {
                let v = p.matrix[[lr, lc]];
                if v == c(0.0, 0.0) {
                    continue;
                }
                let mut row = base;
                let mut rest = lr;
                for &s in sites.iter().rev() {
                    row += (rest % d) * stride[s];
                    rest /= d;
                }
                h[[row, col]] += v;
            }
        }
    }
    Ok(ChainHamiltonian {
        n_sites: n,
        k,
        d,
        boundary,
        matrix: h,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    /// Ascending real part, ties broken by `|Im|`.
    pub eigenvalues: Vec<C64>,
    pub ground_energy: C64,
    pub degeneracy: usize,
    /// `Re E₁ − Re E₀` with `E₁` the lowest level outside the ground cluster.
    pub gap: Option<f64>,
}

fn ascending_real(a: &C64, b: &C64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re)
        .then(a.im.abs().total_cmp(&b.im.abs()))
}

pub fn full_spectrum(h: &ChainHamiltonian, cluster_tol: f64) -> Result<SpectrumReport> {
    let mut vals = linalg::block_eigenvalues(&h.matrix, SortMode::AscendingReal)?;
    vals.sort_by(ascending_real);
    spectrum_report(vals, cluster_tol)
}

fn spectrum_report(vals: Vec<C64>, cluster_tol: f64) -> Result<SpectrumReport> {
    let e0 = *vals
        .first()
        .ok_or_else(|| EdError::InvalidParameter("empty spectrum".into()))?;
    let degeneracy = vals
        .iter()
        .filter(|e| (**e - e0).norm() < cluster_tol)
        .count();
    let gap = vals
        .iter()
        .find(|e| (**e - e0).norm() >= cluster_tol)
        .map(|e| e.re - e0.re);
    Ok(SpectrumReport {
        eigenvalues: vals,
        ground_energy: e0,
        degeneracy,
        gap,
    })
}

/// The projector of the asymmetric AKLT pair at `(mu, k)` embedded on `n` sites.
pub fn aklt_chain(
    mu: f64,
    k: usize,
    n: usize,
    boundary: ChainBoundary,
) -> Result<ChainHamiltonian> {
    let pair = StatePair::asymmetric_aklt(mu)?;
    let p = build_projector(&pair, k)?;
    build_chain(&p, n, boundary)
}

/// Largest distance between two complex multisets after pairing.
///
/// Both lists are sorted by `(Re, Im)` and paired in order; if that leaves a
/// pair further apart than `tol`, an optimal assignment on the distance
/// matrix is used instead.
pub fn spectral_distance(a: &[C64], b: &[C64], tol: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(EdError::InvalidParameter(format!(
            "spectra of different sizes {} and {}",
            a.len(),
            b.len()
        )));
    }
    let lex = |x: &C64, y: &C64| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(lex);
    sb.sort_by(lex);
    let sorted = sa
        .iter()
        .zip(&sb)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    if sorted <= tol {
        return Ok(sorted);
    }
    let cost = Array2::from_shape_fn((sa.len(), sb.len()), |(i, j)| (sa[i] - sb[j]).norm());
    let assignment = min_cost_assignment(&cost);
    let matched = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[[i, j]])
        .fold(0.0, f64::max);
    Ok(matched.min(sorted))
}

/// Hungarian algorithm on a square cost matrix; returns the column matched to each row.
fn min_cost_assignment(cost: &Array2<f64>) -> Vec<usize> {
    let n = cost.nrows();
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut rows = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            rows[p[j] - 1] = j - 1;
        }
    }
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimilarityReport {
    /// Matched-eigenvalue distance between `H(μ)` and `M H(1) M⁻¹`.
    pub spectral_distance: f64,
    /// Largest entry of `H(μ) − M H(1) M⁻¹` relative to `max |H(μ)|`.
    pub matrix_distance: f64,
}

/// Diagonal of `M_μ = ⊗_j μ^{j S^z_j}` in the product basis, `j = 1..n`.
pub fn modification_diagonal(mu: f64, n: usize, d: usize) -> Result<Array1<f64>> {
    if d != 3 {
        return Err(EdError::InvalidParameter("spin-1 chain required".into()));
    }
    let dim = capped_dim(d, n, CHAIN_CAP)?;
    let sz = [1.0, 0.0, -1.0];
    Ok(Array1::from_shape_fn(dim, |idx| {
        let mut rest = idx;
        let mut exponent = 0.0;
        for j in (1..=n).rev() {
            exponent += j as f64 * sz[rest % d];
            rest /= d;
        }
        mu.powf(exponent)
    }))
}

/// Compares the open-chain Hamiltonian at `mu` with the similarity
/// transform of the isotropic one.
pub fn obc_similarity_check(mu: f64, n: usize, k: usize) -> Result<SimilarityReport> {
    capped_dim(3, n, SIMILARITY_CAP)?;
    let h_mu = aklt_chain(mu, k, n, ChainBoundary::Open)?;
    let h_one = aklt_chain(1.0, k, n, ChainBoundary::Open)?;
    let m = modification_diagonal(mu, n, 3)?;
    let mut transformed = h_one.matrix.clone();
    for ((a, b), z) in transformed.indexed_iter_mut() {
        *z *= m[a] / m[b];
    }
    let scale = linalg::max_abs(&h_mu.matrix).max(1.0);
    let matrix_distance = linalg::max_abs_diff(&h_mu.matrix, &transformed) / scale;
    let ea = linalg::block_eigenvalues(&h_mu.matrix, SortMode::AscendingReal)?;
    let eb = linalg::block_eigenvalues(&transformed, SortMode::AscendingReal)?;
    Ok(SimilarityReport {
        spectral_distance: spectral_distance(&ea, &eb, 1e-8)?,
        matrix_distance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    /// Gap extrapolated to `1/N → 0`.
    pub extrapolated: f64,
    /// `[a, b, c]` in `a + b/N + c/N²`.
    pub coefficients: [f64; 3],
    /// Root-mean-square fit residual.
    pub residual: f64,
}

/// Quadratic least-squares fit of the gap in `1/N`.
pub fn gap_scaling(gaps: &[(usize, f64)]) -> Result<ScalingFit> {
    if gaps.len() < 3 {
        return Err(EdError::InvalidParameter(
            "gap scaling needs at least 3 points".into(),
        ));
    }
    if gaps.iter().any(|&(n, g)| n == 0 || !g.is_finite()) {
        return Err(EdError::InvalidParameter(
            "gap points need N ≥ 1 and finite gaps".into(),
        ));
    }
    let a = Array2::from_shape_fn((gaps.len(), 3), |(i, j)| {
        (1.0 / gaps[i].0 as f64).powi(j as i32)
    });
    let b = Array1::from_iter(gaps.iter().map(|&(_, g)| g));
    let x = linalg::least_squares_real(&a, &b)?;
    let fitted = a.dot(&x);
    let residual = ((&fitted - &b).mapv(|r| r * r).sum() / gaps.len() as f64).sqrt();
    Ok(ScalingFit {
        extrapolated: x[0],
        coefficients: [x[0], x[1], x[2]],
        residual,
    })
}

/// Chain lengths `k+1, k+3, k+5` used for the default extrapolation.
pub fn default_scaling_sizes(k: usize) -> Vec<usize> {
    vec![k + 1, k + 3, k + 5]
}

/// Gaps of the periodic chain for each `n` in `sizes`.
pub fn periodic_gaps(mu: f64, k: usize, sizes: &[usize]) -> Result<Vec<(usize, f64)>> {
    sizes
        .iter()
        .map(|&n| {
            let h = aklt_chain(mu, k, n, ChainBoundary::Periodic)?;
            let r = full_spectrum(&h, CLUSTER_TOL)?;
            let g = r
                .gap
                .ok_or_else(|| EdError::InvalidParameter(format!("no excited level at N = {n}")))?;
            Ok((n, g))
        })
        .collect()
}

//! Dense complex linear algebra used throughout the crate.
//!
//! Everything here is a thin, checked layer over LAPACK (through
//! `ndarray-linalg`): inputs are validated, outputs are sorted into a
//! deterministic order, and decompositions verify their own residuals before
//! they are handed back.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use ndarray_linalg::{Eig, EigVals, Eigh, Factorize, JobSvd, Solve, SVDDC, UPLO};
use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;
pub type CMatrix = Array2<C64>;
pub type CVector = Array1<C64>;

/// Default relative tolerance for rank and invertibility decisions.
pub const RANK_TOL: f64 = 1e-10;
/// Relative modulus gap below which the dominant eigenvalue is considered degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Bound on `max |m·m⁻¹ − I|` accepted by [`solve_or_invert`].
pub const INVERSE_RESIDUAL: f64 = 1e-8;
/// Eigen-residual bound, relative to the Frobenius norm of the input.
pub const EIG_RESIDUAL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is empty")]
    Empty,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("dominant eigenvalue is degenerate in modulus (|{first}| vs |{second}|)")]
    DegenerateDominant { first: C64, second: C64 },
    #[error("matrix is rank deficient (rank {rank} of {dim})")]
    RankDeficient { rank: usize, dim: usize },
    #[error("residual {residual:e} exceeds bound {bound:e} in {context}")]
    Residual {
        context: &'static str,
        residual: f64,
        bound: f64,
    },
    #[error("LAPACK failure: {0}")]
    Backend(String),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

fn backend(e: ndarray_linalg::error::LinalgError) -> LinalgError {
    LinalgError::Backend(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortMode {
    DescendingModulus,
    AscendingReal,
}

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<C64>,
    /// Right eigenvectors stored as columns.
    pub right_vectors: CMatrix,
    /// Left eigenvectors stored as columns, normalized so `w_i† v_j = δ_ij`.
    pub left_vectors: CMatrix,
    pub sorted_by: SortMode,
}

#[derive(Debug, Clone)]
pub struct DominantPair {
    pub value: C64,
    pub right: CVector,
    /// Normalized so that `left† · right = 1`.
    pub left: CVector,
}

/// Thin singular value decomposition `m = u · diag(s) · vt`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub vt: CMatrix,
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    Array2::from_diag_elem(n, cr(1.0))
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = CMatrix::zeros((ar * br, ac * bc));
    for ((i, j), &x) in a.indexed_iter() {
        if x == C64::default() {
            continue;
        }
        let mut block = out.slice_mut(s![i * br..(i + 1) * br, j * bc..(j + 1) * bc]);
        block.zip_mut_with(b, |o, &y| *o = x * y);
    }
    out
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.dim(), b.dim(), "max_abs_diff shape mismatch");
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_norm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `a† · b` for vectors.
pub fn inner(a: &CVector, b: &CVector) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

fn check_finite(m: &CMatrix) -> Result<()> {
    if m.is_empty() {
        return Err(LinalgError::Empty);
    }
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(LinalgError::NonFinite)
    }
}

fn check_square(m: &CMatrix) -> Result<usize> {
    check_finite(m)?;
    let (r, c) = m.dim();
    if r != c {
        return Err(LinalgError::NotSquare { rows: r, cols: c });
    }
    Ok(r)
}

fn sort_order(values: &[C64], sort: SortMode) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    match sort {
        SortMode::DescendingModulus => order.sort_by(|&a, &b| {
            let (x, y) = (values[a], values[b]);
            y.norm()
                .total_cmp(&x.norm())
                .then(y.re.total_cmp(&x.re))
                .then(x.im.total_cmp(&y.im))
        }),
        SortMode::AscendingReal => order.sort_by(|&a, &b| {
            let (x, y) = (values[a], values[b]);
            x.re.total_cmp(&y.re)
                .then(x.im.abs().total_cmp(&y.im.abs()))
                .then(x.im.total_cmp(&y.im))
        }),
    }
    order
}

/// Eigenvalues only, sorted per `sort`.
pub fn eigenvalues(m: &CMatrix, sort: SortMode) -> Result<Vec<C64>> {
    check_square(m)?;
    let vals = m.eigvals().map_err(backend)?;
    let vals = vals.to_vec();
    Ok(sort_order(&vals, sort)
        .into_iter()
        .map(|i| vals[i])
        .collect())
}

/// Diagonal similarity `D m D⁻¹` with equal off-diagonal row and column
/// 2-norms, iterated to convergence.
///
/// Returns the balanced matrix and the diagonal of `D`. For a matrix that is
/// diagonally similar to a normal one this recovers the normal form, which
/// keeps eigenvalues accurate when the original is strongly non-normal.
pub fn balance(m: &CMatrix, max_sweeps: usize) -> Result<(CMatrix, Array1<f64>)> {
    let n = check_square(m)?;
    let mut b = m.clone();
    let mut d = Array1::<f64>::ones(n);
    for _ in 0..max_sweeps {
        let mut largest: f64 = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            let mut col = 0.0;
            for j in 0..n {
                if j != i {
                    row += b[[i, j]].norm_sqr();
                    col += b[[j, i]].norm_sqr();
                }
            }
            if row == 0.0 || col == 0.0 {
                continue;
            }
            let f = (col / row).sqrt().sqrt();
            if (f - 1.0).abs() < 1e-14 {
                continue;
            }
            largest = largest.max(f.ln().abs());
            b.row_mut(i).mapv_inplace(|z| z * f);
            b.column_mut(i).mapv_inplace(|z| z / f);
            d[i] *= f;
        }
        if largest < 1e-12 {
            break;
        }
    }
    Ok((b, d))
}

/// Eigenvalues of `m` after [`balance`].
pub fn balanced_eigenvalues(m: &CMatrix, sort: SortMode) -> Result<Vec<C64>> {
    let (b, _) = balance(m, 500)?;
    eigenvalues(&b, sort)
}

/// Index sets of the connected components of the coupling graph
/// `i ~ j ⇔ |m_ij| > drop or |m_ji| > drop`, each sorted ascending.
pub fn coupled_blocks(m: &CMatrix, drop: f64) -> Result<Vec<Vec<usize>>> {
    let n = check_square(m)?;
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for ((i, j), z) in m.indexed_iter() {
        if i != j && z.norm() > drop {
            let (a, b) = (root(&mut parent, i), root(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = root(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    Ok(groups.into_values().collect())
}

/// Eigenvalues of `m` computed block by block over [`coupled_blocks`], each
/// block balanced first.
///
/// Entries below `1e-15 · max|m|` are treated as zero when finding blocks.
pub fn block_eigenvalues(m: &CMatrix, sort: SortMode) -> Result<Vec<C64>> {
    let blocks = coupled_blocks(m, 1e-15 * max_abs(m))?;
    let mut all = Vec::with_capacity(m.nrows());
    for idx in blocks {
        let sub = CMatrix::from_shape_fn((idx.len(), idx.len()), |(a, b)| m[[idx[a], idx[b]]]);
        all.extend(balanced_eigenvalues(&sub, sort)?);
    }
    Ok(sort_order(&all, sort).into_iter().map(|i| all[i]).collect())
}

/// Full eigendecomposition with right and left eigenvectors.
///
/// Left eigenvectors are the conjugated rows of the inverse right-eigenvector
/// matrix, so the pair is biorthonormal. Both residuals are checked against
/// `EIG_RESIDUAL · ‖m‖_F`; a defective or badly conditioned input fails that
/// check and is reported as an error.
pub fn eig_full(m: &CMatrix, sort: SortMode) -> Result<EigenDecomposition> {
    let n = check_square(m)?;
    let (vals, vecs) = m.eig().map_err(backend)?;
    let order = sort_order(vals.as_slice().unwrap_or(&vals.to_vec()), sort);
    let eigenvalues: Vec<C64> = order.iter().map(|&i| vals[i]).collect();
    let right = vecs.select(Axis(1), &order);
    let inv = invert_unchecked(&right)?;
    let left = dagger(&inv);

    let scale = frobenius(m).max(f64::MIN_POSITIVE);
    let bound = EIG_RESIDUAL * scale;
    let av = m.dot(&right);
    let wa = dagger(&left).dot(m);
    for (i, &lambda) in eigenvalues.iter().enumerate() {
        let v = right.column(i);
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let r = av
            .column(i)
            .iter()
            .zip(v.iter())
            .map(|(a, b)| (a - lambda * b).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / vn;
        if r > bound {
            return Err(LinalgError::Residual {
                context: "eig_full right vectors",
                residual: r,
                bound,
            });
        }
        let w = left.column(i);
        let wn = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let r = wa
            .row(i)
            .iter()
            .zip(w.iter())
            .map(|(a, b)| (a - lambda * b.conj()).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / wn;
        if r > bound {
            return Err(LinalgError::Residual {
                context: "eig_full left vectors",
                residual: r,
                bound,
            });
        }
    }
    debug_assert_eq!(eigenvalues.len(), n);
    Ok(EigenDecomposition {
        eigenvalues,
        right_vectors: right,
        left_vectors: left,
        sorted_by: sort,
    })
}

/// Rotate a vector so its largest-modulus component is real and positive.
fn fix_phase(v: &mut CVector) {
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or_default();
    if pivot.norm() > 0.0 {
        let phase = pivot.conj() / pivot.norm();
        v.mapv_inplace(|z| z * phase);
    }
}

fn eigvec_for(m: &CMatrix, target: C64) -> Result<CVector> {
    let (vals, vecs) = m.eig().map_err(backend)?;
    let idx = vals
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - target).norm().total_cmp(&(b.1 - target).norm()))
        .map(|(i, _)| i)
        .ok_or(LinalgError::Empty)?;
    Ok(vecs.column(idx).to_owned())
}

/// Eigenvalue of largest modulus together with its right and left vectors.
///
/// Fails with [`LinalgError::DegenerateDominant`] when the two largest moduli
/// differ by less than `tol` relative to the largest.
pub fn dominant_eigenpair(m: &CMatrix, tol: f64) -> Result<DominantPair> {
    let n = check_square(m)?;
    let vals = eigenvalues(m, SortMode::DescendingModulus)?;
    let first = vals[0];
    if first.norm() == 0.0 {
        return Err(LinalgError::DegenerateDominant {
            first,
            second: vals.get(1).copied().unwrap_or_default(),
        });
    }
    if n > 1 {
        let second = vals[1];
        if first.norm() - second.norm() <= tol * first.norm() {
            return Err(LinalgError::DegenerateDominant { first, second });
        }
    }
    let mut right = eigvec_for(m, first)?;
    let rn = vec_norm(&right);
    right.mapv_inplace(|z| z / rn);
    fix_phase(&mut right);
    let mut left = eigvec_for(&dagger(m), first.conj())?;
    let overlap = inner(&left, &right);
    if overlap.norm() == 0.0 {
        return Err(LinalgError::DegenerateDominant {
            first,
            second: first,
        });
    }
    let k = overlap.conj();
    left.mapv_inplace(|z| z / k);
    Ok(DominantPair {
        value: first,
        right,
        left,
    })
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    check_finite(m)?;
    let (_, s, _) = m.svddc(JobSvd::None).map_err(backend)?;
    Ok(s.to_vec())
}

/// Number of singular values above `tol` times the largest one.
pub fn rank_tol(m: &CMatrix, tol: f64) -> usize {
    match singular_values(m) {
        Ok(s) => {
            let top = s.first().copied().unwrap_or(0.0);
            if top == 0.0 {
                0
            } else {
                s.iter().filter(|&&x| x > tol * top).count()
            }
        }
        Err(_) => 0,
    }
}

/// Ratio of extreme singular values; infinite for singular input.
pub fn condition_number(m: &CMatrix) -> Result<f64> {
    let s = singular_values(m)?;
    let top = s.first().copied().unwrap_or(0.0);
    let bottom = s.last().copied().unwrap_or(0.0);
    Ok(if bottom == 0.0 {
        f64::INFINITY
    } else {
        top / bottom
    })
}

fn invert_unchecked(m: &CMatrix) -> Result<CMatrix> {
    let n = m.nrows();
    solve_unchecked(m, &identity(n))
}

fn solve_unchecked(m: &CMatrix, rhs: &CMatrix) -> Result<CMatrix> {
    let lu = m.factorize().map_err(backend)?;
    let mut out = CMatrix::zeros(rhs.dim());
    for (j, col) in rhs.axis_iter(Axis(1)).enumerate() {
        let x = lu.solve(&col.to_owned()).map_err(backend)?;
        out.column_mut(j).assign(&x);
    }
    Ok(out)
}

fn ensure_full_rank(m: &CMatrix, tol: f64) -> Result<usize> {
    let n = check_square(m)?;
    let rank = rank_tol(m, tol);
    if rank < n {
        return Err(LinalgError::RankDeficient { rank, dim: n });
    }
    Ok(n)
}

/// Inverse of a full-rank square matrix, with the residual verified.
pub fn solve_or_invert(m: &CMatrix, tol: f64) -> Result<CMatrix> {
    let n = ensure_full_rank(m, tol)?;
    let inv = invert_unchecked(m)?;
    let residual = max_abs_diff(&m.dot(&inv), &identity(n));
    if residual >= INVERSE_RESIDUAL {
        return Err(LinalgError::Residual {
            context: "solve_or_invert",
            residual,
            bound: INVERSE_RESIDUAL,
        });
    }
    Ok(inv)
}

/// Solve `m · x = rhs` by pivoted LU after confirming `m` has full rank.
pub fn solve(m: &CMatrix, rhs: &CMatrix, tol: f64) -> Result<CMatrix> {
    ensure_full_rank(m, tol)?;
    if rhs.nrows() != m.nrows() {
        return Err(LinalgError::Shape(format!(
            "rhs has {} rows, matrix has {}",
            rhs.nrows(),
            m.nrows()
        )));
    }
    solve_unchecked(m, rhs)
}

/// Thin SVD: `u` is `m × r`, `vt` is `r × n` with `r = min(m, n)`.
pub fn svd(m: &CMatrix) -> Result<Svd> {
    check_finite(m)?;
    let (u, s, vt) = m.svddc(JobSvd::Some).map_err(backend)?;
    let (u, vt) = match (u, vt) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(LinalgError::Backend("svd returned no vectors".into())),
    };
    let r = s.len();
    Ok(Svd {
        u: u.slice(s![.., ..r]).to_owned(),
        s: s.to_vec(),
        vt: vt.slice(s![..r, ..]).to_owned(),
    })
}

/// Eigen-decomposition of a Hermitian matrix (ascending eigenvalues).
pub fn eigh(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    check_square(m)?;
    let herm = (m + &dagger(m)).mapv(|z| z * 0.5);
    let (vals, vecs) = herm.eigh(UPLO::Upper).map_err(backend)?;
    Ok((vals.to_vec(), vecs))
}

/// Orthonormal basis of the column space (left singular vectors above tolerance).
pub fn column_space(m: &CMatrix, tol: f64) -> Result<CMatrix> {
    let (u, s, _) = m.svddc(JobSvd::All).map_err(backend)?;
    let u = u.ok_or_else(|| LinalgError::Backend("svd returned no U".into()))?;
    let top = s.first().copied().unwrap_or(0.0);
    let r = if top == 0.0 {
        0
    } else {
        s.iter().filter(|&&x| x > tol * top).count()
    };
    Ok(u.slice(s![.., ..r]).to_owned())
}

/// Orthonormal basis of the orthogonal complement of the column space.
pub fn column_space_complement(m: &CMatrix, tol: f64) -> Result<CMatrix> {
    check_finite(m)?;
    let (u, s, _) = m.svddc(JobSvd::All).map_err(backend)?;
    let u = u.ok_or_else(|| LinalgError::Backend("svd returned no U".into()))?;
    let top = s.first().copied().unwrap_or(0.0);
    let r = if top == 0.0 {
        0
    } else {
        s.iter().filter(|&&x| x > tol * top).count()
    };
    Ok(u.slice(s![.., r..]).to_owned())
}

/// Horizontal concatenation of two matrices with equal row counts.
pub fn hstack(a: ArrayView2<C64>, b: ArrayView2<C64>) -> CMatrix {
    ndarray::concatenate(Axis(1), &[a, b]).expect("hstack row mismatch")
}

/// Real least squares for small dense systems: returns `x` minimizing `‖a x − b‖₂`.
pub fn least_squares_real(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let ac = a.mapv(cr);
    let Svd { u, s, vt } = svd(&ac)?;
    let top = s.first().copied().unwrap_or(0.0);
    let mut x = Array1::<C64>::zeros(a.ncols());
    for (k, &sk) in s.iter().enumerate() {
        if sk <= RANK_TOL * top {
            continue;
        }
        let coeff: C64 = u
            .column(k)
            .iter()
            .zip(b.iter())
            .map(|(ui, &bi)| ui.conj() * bi)
            .sum::<C64>()
            / sk;
        x.zip_mut_with(&vt.row(k), |xi, v| *xi += coeff * v.conj());
    }
    Ok(x.mapv(|z| z.re))
}

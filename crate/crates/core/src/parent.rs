//! Local projectors of non-Hermitian parent Hamiltonians.
//!
//! Given a right state `|R⟩` and a left state `|L⟩`, the `k`-site blocked maps
//! `T_R`, `T_L` (shape `d^k × D²`) define the metric `G = T_L† T_R`. When `G`
//! is invertible the oblique projector `P = T_R G⁻¹ T_L†` fixes `T_R` from the
//! left and `T_L†` from the right, and `Π = I − P` annihilates both states.

use ndarray::Array1;
use thiserror::Error;

use crate::linalg::{
    self, cr, dagger, kron, max_abs, max_abs_diff, CMatrix, LinalgError, C64, RANK_TOL,
};
use crate::mps::{coefficient_matrix, MpsError, StatePair, UniformMps};
use crate::spin::SpinOperatorSet;

/// Tolerance for the projector identities (annihilation, idempotence).
pub const PROJECTOR_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParentError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no nH-PH at k = {k}: metric has rank {rank} of {dim}")]
    NoParentHamiltonian { k: usize, rank: usize, dim: usize },
    #[error("projector identity violated: {what} residual {residual:e}")]
    NotAProjector { what: &'static str, residual: f64 },
    #[error(transparent)]
    Mps(#[from] MpsError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, ParentError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Right,
    Left,
}

/// The `k`-site map from the virtual boundary space to the physical space.
#[derive(Debug, Clone)]
pub struct BlockedMap {
    pub matrix: CMatrix,
    pub k: usize,
    pub side: Side,
    pub rank: usize,
}

impl BlockedMap {
    /// Wraps an explicit coefficient matrix (rows: physical, columns: virtual).
    pub fn from_matrix(matrix: CMatrix, k: usize, side: Side) -> Self {
        let rank = linalg::rank_tol(&matrix, RANK_TOL);
        Self {
            matrix,
            k,
            side,
            rank,
        }
    }

    pub fn is_injective(&self) -> bool {
        self.rank == self.matrix.ncols()
    }
}

pub fn blocked_map(state: &UniformMps, k: usize, side: Side) -> Result<BlockedMap> {
    let d = state.physical_dim();
    let dd = state.bond_dim();
    if k == 0 || d.checked_pow(k as u32).is_none_or(|p| p < dd * dd) {
        return Err(ParentError::InvalidParameter(format!(
            "need d^k ≥ D² (d={d}, D={dd}, k={k})"
        )));
    }
    let t = coefficient_matrix(&state.blocked(k)?);
    Ok(BlockedMap::from_matrix(t, k, side))
}

#[derive(Debug, Clone)]
pub struct MetricMatrix {
    pub matrix: CMatrix,
    /// Ratio of extreme singular values (infinite when singular).
    pub condition_estimate: f64,
}

impl MetricMatrix {
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        let condition_estimate = linalg::condition_number(&matrix)?;
        Ok(Self {
            matrix,
            condition_estimate,
        })
    }

    pub fn rank(&self) -> usize {
        linalg::rank_tol(&self.matrix, RANK_TOL)
    }

    pub fn is_invertible(&self) -> bool {
        self.matrix.is_square() && self.rank() == self.matrix.nrows()
    }
}

fn check_pair(left: &BlockedMap, right: &BlockedMap) -> Result<()> {
    if left.matrix.dim() != right.matrix.dim() {
        return Err(ParentError::DimensionMismatch(format!(
            "left map {:?} vs right map {:?}",
            left.matrix.dim(),
            right.matrix.dim()
        )));
    }
    Ok(())
}

/// `G = T_L† T_R`.
pub fn metric(left: &BlockedMap, right: &BlockedMap) -> Result<MetricMatrix> {
    check_pair(left, right)?;
    MetricMatrix::from_matrix(dagger(&left.matrix).dot(&right.matrix))
}

/// A `k`-site term `Π = I − P` of the parent Hamiltonian.
#[derive(Debug, Clone)]
pub struct LocalProjector {
    pub matrix: CMatrix,
    pub k: usize,
    pub d: usize,
    pub mu: Option<f64>,
}

impl LocalProjector {
    /// Wraps a matrix after checking shape and idempotence.
    pub fn new(matrix: CMatrix, k: usize, d: usize, mu: Option<f64>) -> Result<Self> {
        let dim = d
            .checked_pow(k as u32)
            .ok_or_else(|| ParentError::InvalidParameter("d^k overflows".into()))?;
        if matrix.dim() != (dim, dim) {
            return Err(ParentError::DimensionMismatch(format!(
                "projector {:?} for d={d}, k={k}",
                matrix.dim()
            )));
        }
        let p = Self { matrix, k, d, mu };
        let residual = p.idempotence_residual();
        if residual >= PROJECTOR_TOL * max_abs(&p.matrix).max(1.0) {
            return Err(ParentError::NotAProjector {
                what: "idempotence",
                residual,
            });
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `max |P² − P|` with `P = I − Π`.
    pub fn idempotence_residual(&self) -> f64 {
        let p = linalg::identity(self.dim()) - &self.matrix;
        max_abs_diff(&p.dot(&p), &p)
    }

    /// `(max |Π T_R|, max |T_L† Π|)`.
    pub fn annihilation_residuals(&self, left: &BlockedMap, right: &BlockedMap) -> (f64, f64) {
        let r = max_abs(&self.matrix.dot(&right.matrix));
        let l = max_abs(&dagger(&left.matrix).dot(&self.matrix));
        (r, l)
    }

    pub fn hermiticity_residual(&self) -> f64 {
        max_abs_diff(&self.matrix, &dagger(&self.matrix))
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: dagger(&self.matrix),
            k: self.k,
            d: self.d,
            mu: self.mu.map(|m| 1.0 / m),
        }
    }
}

/// `Π = I − T_R G⁻¹ T_L†` for the pair at interaction length `k`.
pub fn build_projector(pair: &StatePair, k: usize) -> Result<LocalProjector> {
    let right = blocked_map(&pair.right, k, Side::Right)?;
    let left = blocked_map(&pair.left, k, Side::Left)?;
    let mut p = projector_from_maps(&left, &right)?;
    p.mu = pair.mu;
    Ok(p)
}

/// The projector built directly from two blocked maps.
pub fn projector_from_maps(left: &BlockedMap, right: &BlockedMap) -> Result<LocalProjector> {
    let g = metric(left, right)?;
    let dim = g.matrix.nrows();
    let rank = g.rank();
    if rank < dim {
        return Err(ParentError::NoParentHamiltonian {
            k: right.k,
            rank,
            dim,
        });
    }
    // P = T_R · (G⁻¹ T_L†), G⁻¹ applied through a pivoted solve
    let x = linalg::solve(&g.matrix, &dagger(&left.matrix), RANK_TOL)?;
    let n = right.matrix.nrows();
    let pi = linalg::identity(n) - right.matrix.dot(&x);
    let d = infer_physical_dim(n, right.k);
    let proj = LocalProjector {
        matrix: pi,
        k: right.k,
        d,
        mu: None,
    };
    let scale = max_abs(&right.matrix).max(max_abs(&left.matrix)).max(1.0);
    let (rr, ll) = proj.annihilation_residuals(left, right);
    if rr >= PROJECTOR_TOL * scale || ll >= PROJECTOR_TOL * scale {
        return Err(ParentError::NotAProjector {
            what: "annihilation",
            residual: rr.max(ll),
        });
    }
    Ok(proj)
}

fn infer_physical_dim(n: usize, k: usize) -> usize {
    if k <= 1 {
        return n;
    }
    let guess = (n as f64).powf(1.0 / k as f64).round() as usize;
    (guess.saturating_sub(1)..=guess + 1)
        .find(|&d| d.checked_pow(k as u32) == Some(n))
        .unwrap_or(n)
}

/// Whether `im(T_R) ⊕ im(T_L)^⊥` is the whole local space.
///
/// Both maps must be injective for the direct sum to have the right
/// dimension; otherwise the answer is `false`.
pub fn criterion_direct_sum(left: &BlockedMap, right: &BlockedMap) -> Result<bool> {
    check_pair(left, right)?;
    let cols = right.matrix.ncols();
    if linalg::rank_tol(&right.matrix, RANK_TOL) != cols
        || linalg::rank_tol(&left.matrix, RANK_TOL) != cols
    {
        return Ok(false);
    }
    let range_r = linalg::column_space(&right.matrix, RANK_TOL)?;
    let perp_l = linalg::column_space_complement(&left.matrix, RANK_TOL)?;
    let joined = linalg::hstack(range_r.view(), perp_l.view());
    let n = joined.nrows();
    Ok(joined.ncols() == n && linalg::rank_tol(&joined, RANK_TOL) == n)
}

/// Whether `U_R = G⁻¹`, `U_L = I` bi-orthogonalizes the two maps, i.e.
/// `T_L† T_R G⁻¹ = I` holds to `PROJECTOR_TOL`.
pub fn criterion_biorthogonal(left: &BlockedMap, right: &BlockedMap) -> Result<bool> {
    let g = metric(left, right)?;
    if !g.is_invertible() {
        return Ok(false);
    }
    let g_inv = match linalg::solve_or_invert(&g.matrix, RANK_TOL) {
        Ok(inv) => inv,
        Err(_) => return Ok(false),
    };
    let transformed = right.matrix.dot(&g_inv);
    let gram = dagger(&left.matrix).dot(&transformed);
    Ok(max_abs_diff(&gram, &linalg::identity(gram.nrows())) < PROJECTOR_TOL)
}

/// The nine orthonormal Hermitian spin-1 operators `λ_1 … λ_9`.
pub fn spin1_lambda_basis() -> Vec<CMatrix> {
    let s = SpinOperatorSet::spin1();
    let id = linalg::identity(3);
    let anti = SpinOperatorSet::anti;
    let sxz = anti(&s.sx, &s.sz);
    let syz = anti(&s.sy, &s.sz);
    let sxy = anti(&s.sx, &s.sy);
    let sx2 = s.sx.dot(&s.sx);
    let sy2 = s.sy.dot(&s.sy);
    let sz2 = s.sz.dot(&s.sz);
    let r2 = 2f64.sqrt();
    let r6 = 6f64.sqrt();
    let sc = |m: CMatrix, f: f64| m.mapv(|z| z * f);
    vec![
        sc(&s.sx + &sxz, 0.5),
        sc(&s.sx - &sxz, 0.5),
        sc(&s.sy + &syz, 0.5),
        sc(&s.sy - &syz, 0.5),
        sc(sxy, 1.0 / r2),
        sc(&s.sz + &sc(sz2.clone(), 3.0), 1.0 / (2.0 * r2)) - sc(id.clone(), 1.0 / r2),
        sc(&sx2 - &sy2, 1.0 / r2),
        sc(
            sc(s.sz.clone(), 3.0) - sc(sz2, 3.0) + sc(id.clone(), 2.0),
            1.0 / (2.0 * r6),
        ),
        sc(id, 1.0 / 3f64.sqrt()),
    ]
}

/// Coefficients `O_mn = Tr[(λ_m ⊗ λ_n)† Π]` of a two-site spin-1 projector.
pub fn expand_lambda(p: &LocalProjector) -> Result<CMatrix> {
    if p.k != 2 || p.d != 3 {
        return Err(ParentError::DimensionMismatch(format!(
            "λ expansion needs k = 2, d = 3 (got k = {}, d = {})",
            p.k, p.d
        )));
    }
    let basis = spin1_lambda_basis();
    let mut out = CMatrix::zeros((9, 9));
    for (m, lm) in basis.iter().enumerate() {
        for (n, ln) in basis.iter().enumerate() {
            let b = dagger(&kron(lm, ln));
            out[[m, n]] = b.dot(&p.matrix).diag().sum();
        }
    }
    Ok(out)
}

/// `Σ_mn O_mn λ_m ⊗ λ_n`.
pub fn reconstruct_lambda(coeffs: &CMatrix) -> CMatrix {
    let basis = spin1_lambda_basis();
    let mut out = CMatrix::zeros((9, 9));
    for (m, lm) in basis.iter().enumerate() {
        for (n, ln) in basis.iter().enumerate() {
            let w = coeffs[[m, n]];
            if w != C64::default() {
                out = out + kron(lm, ln).mapv(|z| z * w);
            }
        }
    }
    out
}

/// The two-site projector of the asymmetric AKLT family written in spin
/// operators:
///
/// ```text
/// Π(μ) = 5/12 (μ/2 S⁻S⁺ + 1/(2μ) S⁺S⁻ + S^z S^z)
///      + 1/6 (μ²/4 (S⁻)²(S⁺)² + 1/(4μ²) (S⁺)²(S⁻)² − (S^z)² ⊗ I − I ⊗ (S^z)²)
///      + 1/24 (μ S^{−z} S^{+z} + 1/μ S^{+z} S^{−z})
///      + 1/4 (S^z)² (S^z)² + 2/3
/// ```
///
/// with `S^{±z} = S^± S^z + S^z S^±`.
pub fn hamiltonian_k2(mu: f64) -> Result<LocalProjector> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(ParentError::InvalidParameter(format!(
            "mu must be finite and positive, got {mu}"
        )));
    }
    let s = SpinOperatorSet::spin1();
    let id = linalg::identity(3);
    let sp2 = s.splus.dot(&s.splus);
    let sm2 = s.sminus.dot(&s.sminus);
    let sz2 = s.sz.dot(&s.sz);
    let spz = SpinOperatorSet::anti(&s.splus, &s.sz);
    let smz = SpinOperatorSet::anti(&s.sminus, &s.sz);
    let term = |w: f64, a: &CMatrix, b: &CMatrix| kron(a, b).mapv(|z| z * w);

    let mut h = term(5.0 / 12.0 * mu / 2.0, &s.sminus, &s.splus)
        + term(5.0 / 12.0 / (2.0 * mu), &s.splus, &s.sminus)
        + term(5.0 / 12.0, &s.sz, &s.sz);
    h = h + term(mu * mu / 24.0, &sm2, &sp2) + term(1.0 / (24.0 * mu * mu), &sp2, &sm2)
        - term(1.0 / 6.0, &sz2, &id)
        - term(1.0 / 6.0, &id, &sz2);
    h = h + term(mu / 24.0, &smz, &spz) + term(1.0 / (24.0 * mu), &spz, &smz);
    h = h + term(0.25, &sz2, &sz2) + linalg::identity(9).mapv(|z| z * (2.0 / 3.0));
    LocalProjector::new(h, 2, 3, Some(mu))
}

/// `(P T) Π (P T)⁻¹` for a two-site spin-1 operator: the sites are swapped
/// and each site is conjugated by the antiunitary `e^{iπS_y} K`.
pub fn pt_transform(pi: &CMatrix) -> CMatrix {
    let u = SpinOperatorSet::spin1().y_rotation_pi();
    let uu = kron(&u, &u);
    let swap = swap_two_sites(3);
    let t = uu.dot(&pi.mapv(|z| z.conj())).dot(&dagger(&uu));
    swap.dot(&t).dot(&swap)
}

/// Permutation matrix exchanging two `d`-dimensional sites.
pub fn swap_two_sites(d: usize) -> CMatrix {
    let mut m = CMatrix::zeros((d * d, d * d));
    for i in 0..d {
        for j in 0..d {
            m[[j * d + i, i * d + j]] = cr(1.0);
        }
    }
    m
}

/// Eigenvalues of a projector sorted by real part, for multiplicity checks.
pub fn projector_spectrum(p: &LocalProjector) -> Result<Array1<C64>> {
    let vals = linalg::eigenvalues(&p.matrix, linalg::SortMode::AscendingReal)?;
    Ok(Array1::from(vals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::asymmetric_aklt;
    use ndarray::array;

    fn toy_map(cols: &[[f64; 3]]) -> BlockedMap {
        let m = CMatrix::from_shape_fn((3, cols.len()), |(i, j)| cr(cols[j][i]));
        BlockedMap::from_matrix(m, 1, Side::Right)
    }

    #[test]
    fn blocked_map_of_aklt_is_full_rank() {
        let a = asymmetric_aklt(1.0).unwrap();
        let t = blocked_map(&a, 2, Side::Right).unwrap();
        assert_eq!(t.matrix.dim(), (9, 4));
        assert_eq!(t.rank, 4);
        let t3 = blocked_map(&asymmetric_aklt(0.5).unwrap(), 3, Side::Right).unwrap();
        assert_eq!(t3.matrix.dim(), (27, 4));
        assert_eq!(t3.rank, 4);
    }

    #[test]
    fn blocked_map_rejects_short_blocks() {
        let a = asymmetric_aklt(1.0).unwrap();
        assert!(matches!(
            blocked_map(&a, 1, Side::Right),
            Err(ParentError::InvalidParameter(_))
        ));
    }

    #[test]
    fn product_state_block_is_onsite_tensor() {
        let p = UniformMps::product(&[cr(0.6), cr(0.0), cr(0.8)]).unwrap();
        let t = blocked_map(&p, 1, Side::Right).unwrap();
        assert_eq!(t.matrix, array![[cr(0.6)], [cr(0.0)], [cr(0.8)]]);
    }

    #[test]
    fn toy_criteria_at_forty_five_degrees() {
        let h = 1.0 / 2f64.sqrt();
        let right = toy_map(&[[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let left = toy_map(&[[0.0, 0.0, 1.0], [h, h, 0.0]]);
        assert!(criterion_direct_sum(&left, &right).unwrap());
        assert!(criterion_biorthogonal(&left, &right).unwrap());
        assert!(metric(&left, &right).unwrap().is_invertible());
    }

    #[test]
    fn toy_criteria_fail_for_xz_plane() {
        let right = toy_map(&[[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let left = toy_map(&[[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(!criterion_direct_sum(&left, &right).unwrap());
        assert!(!criterion_biorthogonal(&left, &right).unwrap());
        assert!(!metric(&left, &right).unwrap().is_invertible());
        assert!(matches!(
            projector_from_maps(&left, &right),
            Err(ParentError::NoParentHamiltonian {
                rank: 1,
                dim: 2,
                ..
            })
        ));
    }

    #[test]
    fn hermitian_pair_satisfies_criteria() {
        let a = asymmetric_aklt(0.7).unwrap();
        let t = blocked_map(&a, 2, Side::Right).unwrap();
        assert!(criterion_direct_sum(&t, &t).unwrap());
        assert!(criterion_biorthogonal(&t, &t).unwrap());
    }

    #[test]
    fn lambda_basis_edges() {
        let basis = spin1_lambda_basis();
        assert_eq!(basis.len(), 9);
        let expect = linalg::identity(3).mapv(|z| z / 3f64.sqrt());
        assert!(max_abs_diff(&basis[8], &expect) < 1e-15);
        // λ_9 also equals (S_x² + S_y² + S_z²)/(2√3)
        let s = SpinOperatorSet::spin1();
        let cas = s.sx.dot(&s.sx) + s.sy.dot(&s.sy) + s.sz.dot(&s.sz);
        assert!(max_abs_diff(&basis[8], &cas.mapv(|z| z / (2.0 * 3f64.sqrt()))) < 1e-15);
    }

    #[test]
    fn expand_lambda_rejects_three_site_projectors() {
        let pair = StatePair::asymmetric_aklt(1.0).unwrap();
        let p = build_projector(&pair, 3).unwrap();
        assert!(matches!(
            expand_lambda(&p),
            Err(ParentError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn hamiltonian_rejects_bad_mu() {
        assert!(hamiltonian_k2(0.0).is_err());
        assert!(hamiltonian_k2(-2.0).is_err());
    }

    #[test]
    fn swap_is_involution() {
        let s = swap_two_sites(3);
        assert!(max_abs_diff(&s.dot(&s), &linalg::identity(9)) < 1e-15);
    }

    #[test]
    fn projector_new_rejects_non_idempotent() {
        let m = linalg::identity(4).mapv(|z| z * 2.0);
        assert!(matches!(
            LocalProjector::new(m, 2, 2, None),
            Err(ParentError::NotAProjector { .. })
        ));
    }
}

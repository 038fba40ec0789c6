//! Translation-invariant matrix product states, transfer matrices and
//! thermodynamic-limit expectation values.
//!
//! Tensors are indexed `[physical][left virtual][right virtual]`. For spin-1
//! chains the physical basis is `S_z = (+1, 0, −1)` and the virtual basis of
//! the asymmetric AKLT family is `(↑, ↓)`.
//!
//! Doubled virtual indices are flattened bra-slow, ket-fast: the transfer
//! matrix entry `E[(α β), (α' β')]` sits at row `α·D_ket + β`, column
//! `α'·D_ket + β'`.

use ndarray::{s, Array1, Array3, Axis};
use thiserror::Error;

use crate::linalg::{
    self, cr, dagger, dominant_eigenpair, CMatrix, CVector, LinalgError, C64, DEGENERACY_TOL,
    RANK_TOL,
};
use crate::spin::SpinOperatorSet;

/// Largest state vector `materialize` will produce (`3^10` amplitudes).
pub const MATERIALIZE_CAP: usize = 59_049;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MpsError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("state of {requested} amplitudes exceeds the cap of {cap}")]
    SizeCap { requested: usize, cap: usize },
    #[error("blocked map never reaches full rank up to k = {k_max}")]
    NotInjective { k_max: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, MpsError>;

/// A uniform (translation-invariant) MPS given by one rank-3 tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformMps {
    tensor: Array3<C64>,
}

impl UniformMps {
    pub fn new(tensor: Array3<C64>) -> Result<Self> {
        let (d, dl, dr) = tensor.dim();
        if d < 1 || dl < 1 || dl != dr {
            return Err(MpsError::DimensionMismatch(format!(
                "tensor shape ({d}, {dl}, {dr}) is not (d, D, D)"
            )));
        }
        if !tensor.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(MpsError::InvalidParameter("non-finite tensor entry".into()));
        }
        Ok(Self { tensor })
    }

    /// Product state with one-dimensional bond.
    pub fn product(local: &[C64]) -> Result<Self> {
        let t = Array3::from_shape_vec((local.len(), 1, 1), local.to_vec())
            .map_err(|e| MpsError::DimensionMismatch(e.to_string()))?;
        Self::new(t)
    }

    pub fn physical_dim(&self) -> usize {
        self.tensor.dim().0
    }

    pub fn bond_dim(&self) -> usize {
        self.tensor.dim().1
    }

    pub fn tensor(&self) -> &Array3<C64> {
        &self.tensor
    }

    /// The `D × D` matrix `A^[i]`.
    pub fn matrix(&self, i: usize) -> CMatrix {
        self.tensor.index_axis(Axis(0), i).to_owned()
    }

    pub fn map_matrices(&self, mut f: impl FnMut(usize, CMatrix) -> CMatrix) -> Result<Self> {
        let d = self.physical_dim();
        let mut out = Array3::zeros((d, 0, 0));
        for i in 0..d {
            let m = f(i, self.matrix(i));
            if i == 0 {
                out = Array3::zeros((d, m.nrows(), m.ncols()));
            }
            out.index_axis_mut(Axis(0), i).assign(&m);
        }
        Self::new(out)
    }

    /// Virtual gauge transformation `A^[i] → X · A^[i] · X⁻¹`.
    pub fn gauge(&self, x: &CMatrix, x_inv: &CMatrix) -> Result<Self> {
        self.map_matrices(|_, a| x.dot(&a).dot(x_inv))
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self {
            tensor: self.tensor.mapv(|z| z * factor),
        }
    }

    /// Coarse-grains `k` consecutive sites into one tensor with physical
    /// dimension `d^k` (first site slowest).
    pub fn blocked(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(MpsError::InvalidParameter("block size must be ≥ 1".into()));
        }
        let d = self.physical_dim();
        let dd = self.bond_dim();
        let mut blocks: Vec<CMatrix> = (0..d).map(|i| self.matrix(i)).collect();
        for _ in 1..k {
            let mut next = Vec::with_capacity(blocks.len() * d);
            for b in &blocks {
                for i in 0..d {
                    next.push(b.dot(&self.matrix(i)));
                }
            }
            blocks = next;
        }
        let mut t = Array3::zeros((blocks.len(), dd, dd));
        for (i, b) in blocks.iter().enumerate() {
            t.index_axis_mut(Axis(0), i).assign(b);
        }
        Self::new(t)
    }

    /// Rescales the tensor so the dominant eigenvalue of its own transfer
    /// matrix has modulus one.
    pub fn normalized(&self) -> Result<Self> {
        let e = transfer_matrix(self, self)?;
        let p = dominant_eigenpair(&e.matrix, DEGENERACY_TOL)?;
        Ok(self.scaled(cr(1.0 / p.value.norm().sqrt())))
    }
}

/// The asymmetric AKLT tensor with valence bond `|↑↓⟩ − μ|↓↑⟩`.
pub fn asymmetric_aklt(mu: f64) -> Result<UniformMps> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(MpsError::InvalidParameter(format!(
            "mu must be finite and positive, got {mu}"
        )));
    }
    let mut t = Array3::zeros((3, 2, 2));
    let r2 = 2f64.sqrt();
    // physical 0: S_z = +1, 1: S_z = 0, 2: S_z = −1; virtual 0: ↑, 1: ↓
    t[[0, 1, 0]] = cr(-mu.sqrt());
    t[[2, 0, 1]] = cr(mu.sqrt());
    t[[1, 0, 0]] = cr(1.0 / r2);
    t[[1, 1, 1]] = cr(-mu / r2);
    UniformMps::new(t)
}

/// The parity partner `A'^[i] = (A^[i])^T`.
pub fn left_partner(right: &UniformMps) -> UniformMps {
    let mut t = right.tensor.clone();
    t.swap_axes(1, 2);
    UniformMps {
        tensor: t.as_standard_layout().to_owned(),
    }
}

/// Right ground state `|R⟩` together with the state `|L⟩` whose bra is `⟨L|`.
#[derive(Debug, Clone)]
pub struct StatePair {
    pub right: UniformMps,
    pub left: UniformMps,
    pub mu: Option<f64>,
}

impl StatePair {
    pub fn new(right: UniformMps, left: UniformMps) -> Result<Self> {
        if right.physical_dim() != left.physical_dim() || right.bond_dim() != left.bond_dim() {
            return Err(MpsError::DimensionMismatch(format!(
                "right (d={}, D={}) vs left (d={}, D={})",
                right.physical_dim(),
                right.bond_dim(),
                left.physical_dim(),
                left.bond_dim()
            )));
        }
        Ok(Self {
            right,
            left,
            mu: None,
        })
    }

    /// `|R⟩ = |Φ_μ⟩` with its parity partner as `|L⟩`.
    pub fn asymmetric_aklt(mu: f64) -> Result<Self> {
        let right = asymmetric_aklt(mu)?;
        let left = left_partner(&right);
        Ok(Self {
            right,
            left,
            mu: Some(mu),
        })
    }
}

/// Mixed transfer matrix `E = Σ_i conj(A_bra^[i]) ⊗ A_ket^[i]`.
#[derive(Debug, Clone)]
pub struct TransferObject {
    pub matrix: CMatrix,
    pub bra_dim: usize,
    pub ket_dim: usize,
}

impl TransferObject {
    /// Regroups `[(α β), (α' β')]` into `[(α α'), (β β')]`.
    pub fn metric_layout(&self) -> CMatrix {
        reshuffle(&self.matrix, self.bra_dim, self.ket_dim)
    }
}

/// Swaps between the `[(α β), (α' β')]` and `[(α α'), (β β')]` layouts of a
/// doubled-index matrix. The map is an involution when `da == db`.
pub fn reshuffle(m: &CMatrix, da: usize, db: usize) -> CMatrix {
    let n = da * db;
    assert_eq!(m.dim(), (n, n), "reshuffle expects a (da·db)² matrix");
    let mut out = CMatrix::zeros((da * da, db * db));
    for a in 0..da {
        for b in 0..db {
            for a2 in 0..da {
                for b2 in 0..db {
                    out[[a * da + a2, b * db + b2]] = m[[a * db + b, a2 * db + b2]];
                }
            }
        }
    }
    out
}

fn unreshuffle(m: &CMatrix, da: usize, db: usize) -> CMatrix {
    let mut out = CMatrix::zeros((da * db, da * db));
    for a in 0..da {
        for b in 0..db {
            for a2 in 0..da {
                for b2 in 0..db {
                    out[[a * db + b, a2 * db + b2]] = m[[a * da + a2, b * db + b2]];
                }
            }
        }
    }
    out
}

/// The `d × D²` coefficient matrix of a (possibly blocked) state: row `i`,
/// column `α·D + β` holds `A^[i]_{αβ}`.
pub fn coefficient_matrix(state: &UniformMps) -> CMatrix {
    let (d, dd, _) = state.tensor.dim();
    state
        .tensor
        .to_shape((d, dd * dd))
        .expect("standard layout")
        .to_owned()
}

pub fn transfer_matrix(bra: &UniformMps, ket: &UniformMps) -> Result<TransferObject> {
    let d = bra.physical_dim();
    if d != ket.physical_dim() {
        return Err(MpsError::DimensionMismatch(format!(
            "physical dimensions {} and {}",
            d,
            ket.physical_dim()
        )));
    }
    let op = linalg::identity(d);
    let matrix = operator_transfer(bra, ket, &op)?;
    Ok(TransferObject {
        matrix,
        bra_dim: bra.bond_dim(),
        ket_dim: ket.bond_dim(),
    })
}

/// Transfer matrix with an operator inserted on the physical legs:
/// `E_O[(α β), (α' β')] = Σ_{ij} O_{ij} conj(A_bra^[i])_{αα'} (A_ket^[j])_{ββ'}`.
pub fn operator_transfer(bra: &UniformMps, ket: &UniformMps, op: &CMatrix) -> Result<CMatrix> {
    let d = bra.physical_dim();
    if op.dim() != (d, d) || ket.physical_dim() != d {
        return Err(MpsError::DimensionMismatch(format!(
            "operator {:?} for physical dimension {d}",
            op.dim()
        )));
    }
    let ta = coefficient_matrix(bra);
    let tb = coefficient_matrix(ket);
    let gram = dagger(&ta).dot(op).dot(&tb);
    Ok(unreshuffle(&gram, bra.bond_dim(), ket.bond_dim()))
}

/// The RG fixed point `lim (E/λ)^k` as the spectral projector onto the
/// dominant eigenvector.
pub fn rg_fixed_point(e: &TransferObject, tol: f64) -> Result<CMatrix> {
    let p = dominant_eigenpair(&e.matrix, tol)?;
    let n = p.right.len();
    Ok(CMatrix::from_shape_fn((n, n), |(i, j)| {
        p.right[i] * p.left[j].conj()
    }))
}

/// Fixed-point metric `G^∞`: the fixed point regrouped into the metric layout.
pub fn fixed_point_metric(e: &TransferObject, tol: f64) -> Result<CMatrix> {
    let fp = rg_fixed_point(e, tol)?;
    Ok(reshuffle(&fp, e.bra_dim, e.ket_dim))
}

/// Thermodynamic-limit expectation `⟨bra| O |ket⟩ / ⟨bra|ket⟩` of an operator
/// acting on `span` consecutive sites.
pub fn expectation(bra: &UniformMps, ket: &UniformMps, op: &CMatrix, span: usize) -> Result<C64> {
    if span < 1 {
        return Err(MpsError::InvalidParameter("span must be ≥ 1".into()));
    }
    let e = transfer_matrix(bra, ket)?;
    let p = dominant_eigenpair(&e.matrix, DEGENERACY_TOL)?;
    let eo = operator_transfer(&bra.blocked(span)?, &ket.blocked(span)?, op)?;
    let num: C64 = p
        .left
        .iter()
        .zip(eo.dot(&p.right).iter())
        .map(|(w, x)| w.conj() * x)
        .sum();
    Ok(num / p.value.powi(span as i32))
}

/// `⟨L| O |R⟩ / ⟨L|R⟩` in the thermodynamic limit.
pub fn expectation_lr(pair: &StatePair, op: &CMatrix, span: usize) -> Result<C64> {
    expectation(&pair.left, &pair.right, op, span)
}

/// `⟨R| O |R⟩ / ⟨R|R⟩` in the thermodynamic limit.
pub fn expectation_rr(state: &UniformMps, op: &CMatrix, span: usize) -> Result<C64> {
    expectation(state, state, op, span)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Boundary {
    Periodic,
    /// Boundary vectors contracted into the first left and last right bonds.
    Open {
        left: CVector,
        right: CVector,
    },
}

impl Boundary {
    /// Open boundary with basis vectors `e_α` on the left and `e_β` on the right.
    pub fn open_basis(dim: usize, alpha: usize, beta: usize) -> Self {
        let mut l = CVector::zeros(dim);
        let mut r = CVector::zeros(dim);
        l[alpha] = cr(1.0);
        r[beta] = cr(1.0);
        Boundary::Open { left: l, right: r }
    }
}

/// Amplitudes of the finite `n`-site chain, site 1 slowest.
pub fn materialize(state: &UniformMps, n: usize, boundary: &Boundary) -> Result<CVector> {
    let d = state.physical_dim();
    let dd = state.bond_dim();
    if n == 0 {
        return Err(MpsError::InvalidParameter(
            "chain length must be ≥ 1".into(),
        ));
    }
    let size = d
        .checked_pow(n as u32)
        .filter(|&s| s <= MATERIALIZE_CAP)
        .ok_or(MpsError::SizeCap {
            requested: d.saturating_pow(n as u32),
            cap: MATERIALIZE_CAP,
        })?;
    if let Boundary::Open { left, right } = boundary {
        if left.len() != dd || right.len() != dd {
            return Err(MpsError::DimensionMismatch(format!(
                "boundary vectors must have length {dd}"
            )));
        }
    }
    // partial[(I), a, b]: product of the first j matrices
    let mut partial = state.tensor.clone();
    for _ in 1..n {
        let m = partial.dim().0;
        let mut next = Array3::zeros((m * d, dd, dd));
        for idx in 0..m {
            let p = partial.index_axis(Axis(0), idx);
            for i in 0..d {
                let prod = p.dot(&state.tensor.index_axis(Axis(0), i));
                next.index_axis_mut(Axis(0), idx * d + i).assign(&prod);
            }
        }
        partial = next;
    }
    let out: Vec<C64> = (0..size)
        .map(|idx| {
            let p = partial.index_axis(Axis(0), idx);
            match boundary {
                Boundary::Periodic => (0..dd).map(|a| p[[a, a]]).sum(),
                Boundary::Open { left, right } => left.dot(&p.dot(right)),
            }
        })
        .collect();
    Ok(Array1::from(out))
}

/// Smallest `k ≤ k_max` whose blocked map has full rank `D²`.
pub fn injectivity_blocking(state: &UniformMps, k_max: usize) -> Result<usize> {
    if k_max < 1 {
        return Err(MpsError::InvalidParameter("k_max must be ≥ 1".into()));
    }
    let d = state.physical_dim();
    let target = state.bond_dim() * state.bond_dim();
    for k in 1..=k_max {
        if d.pow(k as u32) < target {
            continue;
        }
        let t = coefficient_matrix(&state.blocked(k)?);
        if linalg::rank_tol(&t, RANK_TOL) == target {
            return Ok(k);
        }
    }
    Err(MpsError::NotInjective { k_max })
}

/// Result of searching for a virtual gauge `M` with
/// `Σ_j U_ij conj(A^[j]) = c · M⁻¹ (A^[i])^T M`.
#[derive(Debug, Clone)]
pub struct JointSymmetry {
    pub constant: C64,
    pub gauge: CMatrix,
    /// Relative residual of the best candidate.
    pub residual: f64,
}

/// Searches for the gauge realizing the combined parity/time-reversal
/// condition of a spin-1 tensor, with `U = e^{−iπ S_y}`.
///
/// The condition `M·B_i = c·A_iᵀ·M` is linear in `M` for fixed `c`; stacking
/// the three physical components gives `L m = c K m`, which is reduced to the
/// square eigenproblem `K⁺ L m = c m` and each candidate is checked against
/// the full system.
pub fn joint_symmetry_gauge(state: &UniformMps) -> Result<JointSymmetry> {
    let d = state.physical_dim();
    if d != 3 {
        return Err(MpsError::DimensionMismatch("spin-1 tensor required".into()));
    }
    let u = SpinOperatorSet::spin1().y_rotation_pi();
    let dd = state.bond_dim();
    let n = dd * dd;
    let id = linalg::identity(dd);
    let mut big_l = CMatrix::zeros((d * n, n));
    let mut big_k = CMatrix::zeros((d * n, n));
    for i in 0..d {
        let mut b = CMatrix::zeros((dd, dd));
        for j in 0..d {
            b = b + state.matrix(j).mapv(|z| z.conj() * u[[i, j]]);
        }
        // row-major vec: vec(M B) = (I ⊗ Bᵀ) vec(M), vec(Aᵀ M) = (Aᵀ ⊗ I) vec(M)
        let li = linalg::kron(&id, &b.t().to_owned());
        let ki = linalg::kron(&state.matrix(i).t().to_owned(), &id);
        big_l.slice_mut(s![i * n..(i + 1) * n, ..]).assign(&li);
        big_k.slice_mut(s![i * n..(i + 1) * n, ..]).assign(&ki);
    }
    let kdk = dagger(&big_k).dot(&big_k);
    let reduced = linalg::solve(&kdk, &dagger(&big_k).dot(&big_l), RANK_TOL)?;
    let (vals, vecs) = {
        use ndarray_linalg::Eig;
        reduced
            .eig()
            .map_err(|e| LinalgError::Backend(e.to_string()))?
    };
    let mut best: Option<JointSymmetry> = None;
    for (idx, &cst) in vals.iter().enumerate() {
        let m = vecs.column(idx).to_owned();
        let km = big_k.dot(&m);
        let lm = big_l.dot(&m);
        let denom = linalg::vec_norm(&km).max(f64::MIN_POSITIVE);
        let residual = linalg::vec_norm(&(&lm - &km.mapv(|z| z * cst))) / denom;
        let gauge = m.to_shape((dd, dd)).expect("square gauge").to_owned();
        if linalg::rank_tol(&gauge, 1e-8) < dd {
            continue;
        }
        if best.as_ref().is_none_or(|b| residual < b.residual) {
            best = Some(JointSymmetry {
                constant: cst,
                gauge,
                residual,
            });
        }
    }
    best.ok_or(MpsError::Linalg(LinalgError::RankDeficient {
        rank: 0,
        dim: dd,
    }))
}

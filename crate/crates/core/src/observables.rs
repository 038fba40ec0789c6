//! Chiral, antiferromagnetic and string order parameters, entanglement
//! spectra and per-site infidelity.

use serde::{Deserialize, Serialize};

use crate::linalg::{self, cr, dagger, kron, CMatrix, SortMode, C64, DEGENERACY_TOL};
use crate::mps::{
    self, expectation, operator_transfer, transfer_matrix, MpsError, StatePair, UniformMps,
};
pub use crate::spin::SpinOperatorSet;

pub type Result<T> = std::result::Result<T, MpsError>;

/// Which pair of states the expectation value is taken between.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// `⟨L| · |R⟩ / ⟨L|R⟩`
    #[serde(rename = "LR")]
    Lr,
    /// `⟨R| · |R⟩ / ⟨R|R⟩`
    #[serde(rename = "RR")]
    Rr,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Lr => "LR",
            Mode::Rr => "RR",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderSweepRow {
    pub mu: f64,
    pub o_af: C64,
    pub o_left: C64,
    pub o_right: C64,
    pub o_chiral: C64,
    pub mode: Mode,
}

/// Two-site operators used by the order parameters.
#[derive(Debug, Clone)]
pub struct OrderOperators {
    /// `S^z ⊗ S^z`
    pub af: CMatrix,
    /// `½ S⁺ ⊗ S⁻`
    pub left: CMatrix,
    /// `½ S⁻ ⊗ S⁺`
    pub right: CMatrix,
    /// `right − left`, anti-Hermitian.
    pub chiral: CMatrix,
}

impl OrderOperators {
    pub fn spin1() -> Self {
        let s = SpinOperatorSet::spin1();
        let af = kron(&s.sz, &s.sz);
        let left = kron(&s.splus, &s.sminus).mapv(|z| z * 0.5);
        let right = kron(&s.sminus, &s.splus).mapv(|z| z * 0.5);
        let chiral = &right - &left;
        Self {
            af,
            left,
            right,
            chiral,
        }
    }
}

fn bra_ket(mu: f64, mode: Mode) -> Result<(UniformMps, UniformMps)> {
    let pair = StatePair::asymmetric_aklt(mu)?;
    Ok(match mode {
        Mode::Lr => (pair.left, pair.right),
        Mode::Rr => (pair.right.clone(), pair.right),
    })
}

/// Order parameters of the asymmetric AKLT pair at `mu`.
pub fn order_parameters(mu: f64, mode: Mode) -> Result<OrderSweepRow> {
    let (bra, ket) = bra_ket(mu, mode)?;
    order_parameters_for(&bra, &ket, mu, mode)
}

/// Order parameters for an arbitrary spin-1 bra/ket pair.
pub fn order_parameters_for(
    bra: &UniformMps,
    ket: &UniformMps,
    mu: f64,
    mode: Mode,
) -> Result<OrderSweepRow> {
    let ops = OrderOperators::spin1();
    let o_af = expectation(bra, ket, &ops.af, 2)?;
    let o_left = expectation(bra, ket, &ops.left, 2)?;
    let o_right = expectation(bra, ket, &ops.right, 2)?;
    Ok(OrderSweepRow {
        mu,
        o_af,
        o_left,
        o_right,
        o_chiral: o_right - o_left,
        mode,
    })
}

/// `⟨S^z_i (Π e^{iπ S^z}) S^z_j⟩` over a segment of `m` sites (`m − 2`
/// parity insertions between the end points).
pub fn string_order(mu: f64, m: usize, mode: Mode) -> Result<C64> {
    let (bra, ket) = bra_ket(mu, mode)?;
    string_order_for(&bra, &ket, m)
}

pub fn string_order_for(bra: &UniformMps, ket: &UniformMps, m: usize) -> Result<C64> {
    if m < 2 {
        return Err(MpsError::InvalidParameter(
            "string length must be ≥ 2".into(),
        ));
    }
    let s = SpinOperatorSet::spin1();
    let e = transfer_matrix(bra, ket)?;
    let p = linalg::dominant_eigenpair(&e.matrix, DEGENERACY_TOL)?;
    let e_sz = operator_transfer(bra, ket, &s.sz)?;
    let e_par = operator_transfer(bra, ket, &s.z_parity())?;
    let lambda = p.value;
    // walk right to left, normalizing each factor by λ
    let mut v = e_sz.dot(&p.right).mapv(|z| z / lambda);
    for _ in 0..m - 2 {
        v = e_par.dot(&v).mapv(|z| z / lambda);
    }
    v = e_sz.dot(&v).mapv(|z| z / lambda);
    Ok(linalg::inner(&p.left, &v))
}

/// Squared Schmidt values of a half-infinite cut, descending and summing to one.
///
/// The dominant left and right fixed points of the state's own transfer
/// matrix are factored as `X X†` and `Y Y†`; the weights are the squared
/// singular values of `X† Y`.
pub fn entanglement_spectrum(state: &UniformMps) -> Result<Vec<f64>> {
    let dd = state.bond_dim();
    let e = transfer_matrix(state, state)?;
    let p = linalg::dominant_eigenpair(&e.matrix, DEGENERACY_TOL)?;
    let right = CMatrix::from_shape_fn((dd, dd), |(b, a)| p.right[a * dd + b]);
    let left = CMatrix::from_shape_fn((dd, dd), |(a, b)| p.left[a * dd + b].conj());
    let x = hermitian_factor(&left)?;
    let y = hermitian_factor(&right)?;
    let svals = linalg::singular_values(&dagger(&x).dot(&y))?;
    let mut w: Vec<f64> = svals.iter().map(|s| s * s).collect();
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(MpsError::InvalidParameter(
            "vanishing fixed point, state is not injective".into(),
        ));
    }
    w.iter_mut().for_each(|x| *x /= total);
    w.sort_by(|a, b| b.total_cmp(a));
    Ok(w)
}

/// `F` with `F F† = m` for a fixed point known only up to a phase.
fn hermitian_factor(m: &CMatrix) -> Result<CMatrix> {
    let tr: C64 = m.diag().sum();
    let phase = if tr.norm() > 0.0 {
        tr.conj() / tr.norm()
    } else {
        cr(1.0)
    };
    let h = m.mapv(|z| z * phase);
    let (vals, vecs) = linalg::eigh(&h)?;
    let mut f = vecs;
    for (j, v) in vals.iter().enumerate() {
        let s = v.max(0.0).sqrt();
        f.column_mut(j).mapv_inplace(|z| z * s);
    }
    Ok(f)
}

fn spectral_radius(m: &CMatrix) -> Result<f64> {
    let vals = linalg::eigenvalues(m, SortMode::DescendingModulus)?;
    Ok(vals.first().map_or(0.0, |z| z.norm()))
}

/// Rescales a state so the spectral radius of its own transfer matrix is one.
pub fn normalize_state(state: &UniformMps) -> Result<UniformMps> {
    let e = transfer_matrix(state, state)?;
    let r = spectral_radius(&e.matrix)?;
    if r == 0.0 {
        return Err(MpsError::InvalidParameter("state has zero norm".into()));
    }
    Ok(state.scaled(cr(1.0 / r.sqrt())))
}

/// `1 − |λ|` with `λ` the dominant eigenvalue of the mixed transfer matrix
/// between the two normalized states.
pub fn infidelity(reference: &UniformMps, candidate: &UniformMps) -> Result<f64> {
    let a = normalize_state(reference)?;
    let b = normalize_state(candidate)?;
    let e = transfer_matrix(&a, &b)?;
    let r = spectral_radius(&e.matrix)?;
    Ok((1.0 - r).clamp(0.0, 1.0))
}

/// Per-site infidelity `1 − |λ|^{1/block}` where `candidate` is a
/// `block`-site coarse-graining and `reference` is a single-site state.
pub fn infidelity_per_site(
    reference: &UniformMps,
    candidate: &UniformMps,
    block: usize,
) -> Result<f64> {
    let blocked = reference.blocked(block)?;
    let a = normalize_state(&blocked)?;
    let b = normalize_state(candidate)?;
    let e = transfer_matrix(&a, &b)?;
    let r = spectral_radius(&e.matrix)?;
    Ok((1.0 - r.powf(1.0 / block as f64)).clamp(0.0, 1.0))
}

/// Entanglement spectrum of `|Φ_μ⟩`.
pub fn aklt_entanglement_spectrum(mu: f64) -> Result<Vec<f64>> {
    entanglement_spectrum(&mps::asymmetric_aklt(mu)?)
}

//! Multi-site imaginary-time evolution of a `k`-site unit cell with an
//! inverse-free truncation chain.
//!
//! The cell stores `X_i = T_i G_i` and the weights `G_i` on the bond to the
//! right of site `i`. A window update applies the gate to `X_1 ⋯ X_k`,
//! multiplies the left weight in, and peels off one site at a time by SVD:
//! `G_{i−1} Y = U G_i' V†` gives `X_i' = Y V` and the remainder `V†`. The
//! last site takes the final remainder. No weight is ever divided by.

use ndarray::{Array1, Array2, Array3, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{nested_to_tensor, tensor_to_nested, Pair};
use crate::linalg::{self, c, dagger, CMatrix, LinalgError, C64, DEGENERACY_TOL};
use crate::mps::{transfer_matrix, MpsError, UniformMps};
use crate::parent::{LocalProjector, ParentError, PROJECTOR_TOL};

/// Weights below this (after normalization) are dropped.
pub const WEIGHT_FLOOR: f64 = 1e-14;
/// Number of trailing `e` values kept in a checkpoint.
pub const HISTORY_TAIL: usize = 1_000;

#[derive(Debug, Error)]
pub enum ItebdError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("all weights on bond {bond} fell below the floor")]
    BondCollapse { bond: usize },
    #[error(transparent)]
    Parent(#[from] ParentError),
    #[error(transparent)]
    Mps(#[from] MpsError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, ItebdError>;

/// A `k`-site cell in the `X_i = T_i G_i` representation.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitCellState {
    /// `X_i`, indexed `[physical][left][right]`.
    pub site_tensors: Vec<Array3<C64>>,
    /// `G_i` on the bond right of site `i`, descending, unit square-sum.
    pub schmidt_weights: Vec<Vec<f64>>,
    pub d_max: usize,
}

impl UnitCellState {
    pub fn new(
        site_tensors: Vec<Array3<C64>>,
        schmidt_weights: Vec<Vec<f64>>,
        d_max: usize,
    ) -> Result<Self> {
        let k = site_tensors.len();
        if k == 0 || schmidt_weights.len() != k {
            return Err(ItebdError::InvalidParameter(
                "need one weight vector per site and at least one site".into(),
            ));
        }
        let d = site_tensors[0].dim().0;
        for i in 0..k {
            let (di, dl, dr) = site_tensors[i].dim();
            let left = schmidt_weights[(i + k - 1) % k].len();
            if di != d || dl != left || dr != schmidt_weights[i].len() {
                return Err(ItebdError::InvalidParameter(format!(
                    "site {i} has shape ({di}, {dl}, {dr}) but bonds ({left}, {})",
                    schmidt_weights[i].len()
                )));
            }
            if dr > d_max {
                return Err(ItebdError::InvalidParameter(format!(
                    "bond {i} of size {dr} exceeds D_max = {d_max}"
                )));
            }
        }
        Ok(Self {
            site_tensors,
            schmidt_weights,
            d_max,
        })
    }

    pub fn k(&self) -> usize {
        self.site_tensors.len()
    }

    pub fn physical_dim(&self) -> usize {
        self.site_tensors[0].dim().0
    }

    /// Seeded random cell: entries uniform in `[−1, 1]²`, flat weights.
    pub fn random(k: usize, d: usize, d_max: usize, seed: u64) -> Result<Self> {
        if k == 0 || d == 0 || d_max == 0 {
            return Err(ItebdError::InvalidParameter(
                "k, d and D_max must be ≥ 1".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensors = (0..k)
            .map(|_| {
                Array3::from_shape_simple_fn((d, d_max, d_max), || {
                    c(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
                })
            })
            .collect();
        let w = vec![1.0 / (d_max as f64).sqrt(); d_max];
        Self::new(tensors, vec![w; k], d_max)
    }

    /// Canonical cell with every site equal to the single-site state.
    ///
    /// The state is brought to the form `X = Γ Λ` with `Σ_i X^i X^i† = I`
    /// and `Λ` the Schmidt values; building it divides by `Λ`, so the state
    /// must be injective.
    pub fn from_uniform(state: &UniformMps, k: usize, d_max: usize) -> Result<Self> {
        if k == 0 {
            return Err(ItebdError::InvalidParameter("k must be ≥ 1".into()));
        }
        let (x, lambda) = canonical_form(state)?;
        if lambda.len() > d_max {
            return Err(ItebdError::InvalidParameter(format!(
                "state bond {} exceeds D_max = {d_max}",
                lambda.len()
            )));
        }
        Self::new(vec![x; k], vec![lambda; k], d_max)
    }

    /// Uniform MPS on the `d^k`-dimensional coarse-grained site.
    ///
    /// The tensor is `X_1 ⋯ X_k`, which is gauge-equivalent to
    /// `G_k^{1/2} T_1 G_1 ⋯ T_k G_k^{1/2}` and describes the same state.
    pub fn to_uniform(&self) -> Result<UniformMps> {
        let d = self.physical_dim();
        let mut blocks: Vec<CMatrix> = self.site_tensors[0]
            .outer_iter()
            .map(|m| m.to_owned())
            .collect();
        for x in &self.site_tensors[1..] {
            let mut next = Vec::with_capacity(blocks.len() * d);
            for b in &blocks {
                for m in x.outer_iter() {
                    next.push(b.dot(&m));
                }
            }
            blocks = next;
        }
        let (r, cc) = blocks[0].dim();
        let mut t = Array3::zeros((blocks.len(), r, cc));
        for (i, b) in blocks.iter().enumerate() {
            t.index_axis_mut(Axis(0), i).assign(b);
        }
        Ok(UniformMps::new(t)?)
    }

    /// Largest deviation of any weight vector from unit square-sum.
    pub fn normalization_residual(&self) -> f64 {
        self.schmidt_weights
            .iter()
            .map(|w| (w.iter().map(|x| x * x).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// `(Γ Λ, Λ)` with `Σ_i (ΓΛ)^i (ΓΛ)^i† = I`.
fn canonical_form(state: &UniformMps) -> Result<(Array3<C64>, Vec<f64>)> {
    let dd = state.bond_dim();
    let e = transfer_matrix(state, state)?;
    let p = linalg::dominant_eigenpair(&e.matrix, DEGENERACY_TOL)?;
    let right = CMatrix::from_shape_fn((dd, dd), |(b, a)| p.right[a * dd + b]);
    let left = CMatrix::from_shape_fn((dd, dd), |(a, b)| p.left[a * dd + b].conj());
    // right = Y Y†, left = W† W
    let y = hermitian_sqrt_factor(&right)?;
    let w = dagger(&hermitian_sqrt_factor(&left)?);
    let linalg::Svd { u, s, vt } = linalg::svd(&w.dot(&y))?;
    if s.iter().any(|&x| x <= linalg::RANK_TOL * s[0]) {
        return Err(ItebdError::Mps(MpsError::InvalidParameter(
            "fixed points are singular, state is not injective".into(),
        )));
    }
    let norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
    let lambda: Vec<f64> = s.iter().map(|x| x / norm).collect();
    // P = U† W, P⁻¹ = Y V Λ⁻¹; Ã = P A P⁻¹ is left-canonical, X = Λ⁻¹ Ã Λ
    let pm = dagger(&u).dot(&w);
    let pinv = y
        .dot(&dagger(&vt))
        .dot(&CMatrix::from_diag(&Array1::from_iter(
            s.iter().map(|&x| c(1.0 / x, 0.0)),
        )));
    let lam = CMatrix::from_diag(&Array1::from_iter(lambda.iter().map(|&x| c(x, 0.0))));
    let lam_inv = CMatrix::from_diag(&Array1::from_iter(lambda.iter().map(|&x| c(1.0 / x, 0.0))));
    let scale = c(1.0 / p.value.norm().sqrt(), 0.0);
    let d = state.physical_dim();
    let mut x = Array3::zeros((d, dd, dd));
    for i in 0..d {
        let a = pm.dot(&state.matrix(i)).dot(&pinv);
        x.index_axis_mut(Axis(0), i)
            .assign(&lam_inv.dot(&a).dot(&lam).mapv(|z| z * scale));
    }
    Ok((x, lambda))
}

/// `F` with `F F† = m` for a Hermitian positive matrix known up to a phase.
fn hermitian_sqrt_factor(m: &CMatrix) -> Result<CMatrix> {
    let tr: C64 = m.diag().sum();
    let phase = if tr.norm() > 0.0 {
        tr.conj() / tr.norm()
    } else {
        c(1.0, 0.0)
    };
    let h = m.mapv(|z| z * phase);
    let h = (&h + &dagger(&h)).mapv(|z| z * 0.5);
    let (vals, mut vecs) = linalg::eigh(&h)?;
    for (j, v) in vals.iter().enumerate() {
        let s = v.max(0.0).sqrt();
        vecs.column_mut(j).mapv_inplace(|z| z * s);
    }
    Ok(vecs)
}

/// `e^{−dτ Π}` on `k` sites.
#[derive(Debug, Clone)]
pub struct EvolutionGate {
    pub matrix: CMatrix,
    pub dtau: f64,
    pub k: usize,
    pub d: usize,
}

/// `I + (e^{−dτ} − 1) Π`, exact because `Π² = Π`.
pub fn make_gate(p: &LocalProjector, dtau: f64) -> Result<EvolutionGate> {
    if !(dtau.is_finite() && dtau >= 0.0) {
        return Err(ItebdError::InvalidParameter(format!(
            "dtau = {dtau} must be ≥ 0"
        )));
    }
    let pi2 = p.matrix.dot(&p.matrix);
    let residual = linalg::max_abs_diff(&pi2, &p.matrix);
    if residual >= PROJECTOR_TOL * linalg::max_abs(&p.matrix).max(1.0) {
        return Err(ParentError::NotAProjector {
            what: "idempotence",
            residual,
        }
        .into());
    }
    let f = c((-dtau).exp() - 1.0, 0.0);
    let matrix = linalg::identity(p.dim()) + p.matrix.mapv(|z| z * f);
    Ok(EvolutionGate {
        matrix,
        dtau,
        k: p.k,
        d: p.d,
    })
}

/// Keeps at most `d_max` weights above the floor and renormalizes.
fn truncate(s: &[f64], d_max: usize, bond: usize) -> Result<Vec<f64>> {
    let norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(ItebdError::BondCollapse { bond });
    }
    let kept: Vec<f64> = s
        .iter()
        .map(|x| x / norm)
        .take(d_max)
        .filter(|&x| x > WEIGHT_FLOOR)
        .collect();
    if kept.is_empty() {
        return Err(ItebdError::BondCollapse { bond });
    }
    let n2 = kept.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(kept.into_iter().map(|x| x / n2).collect())
}

/// One gate application on the window starting at site `offset`.
fn window_update(state: &mut UnitCellState, gate: &CMatrix, offset: usize) -> Result<()> {
    let k = state.k();
    let d = state.physical_dim();
    let sites: Vec<usize> = (0..k).map(|j| (offset + j) % k).collect();
    let left_w = state.schmidt_weights[(offset + k - 1) % k].clone();
    let dl = left_w.len();
    let db = state.schmidt_weights[sites[k - 1]].len();

    // Θ as rows (s_1 ⋯ s_k), cols (a, b)
    let mut blocks: Vec<CMatrix> = state.site_tensors[sites[0]]
        .outer_iter()
        .map(|m| m.to_owned())
        .collect();
    for &s in &sites[1..] {
        let x = &state.site_tensors[s];
        let mut next = Vec::with_capacity(blocks.len() * d);
        for b in &blocks {
            for m in x.outer_iter() {
                next.push(b.dot(&m));
            }
        }
        blocks = next;
    }
    let np = blocks.len();
    let theta = Array2::from_shape_fn((np, dl * db), |(p, ab)| blocks[p][[ab / db, ab % db]]);
    let theta = gate.dot(&theta);
    let scale = linalg::max_abs(&theta);
    if !(scale.is_finite() && scale > 0.0) {
        return Err(ItebdError::BondCollapse { bond: sites[0] });
    }

    // remainder with rows (a, s_1), cols (s_2 ⋯ s_k, b)
    let rest = np / d;
    let mut y = Array2::from_shape_fn((dl * d, rest * db), |(r, col)| {
        let (a, s1) = (r / d, r % d);
        let (q, b) = (col / db, col % db);
        theta[[s1 * rest + q, a * db + b]] / scale
    });
    let mut w = left_w;
    for &site in &sites[..k - 1] {
        let rows = y.nrows();
        let weighted = Array2::from_shape_fn(y.dim(), |(r, col)| y[[r, col]] * w[r / d]);
        let linalg::Svd { s, vt, .. } = linalg::svd(&weighted)?;
        let kept = truncate(&s, state.d_max, site)?;
        let r = kept.len();
        let vt = vt.slice(ndarray::s![..r, ..]).to_owned();
        let xm = y.dot(&dagger(&vt));
        let cl = rows / d;
        state.site_tensors[site] =
            Array3::from_shape_fn((d, cl, r), |(s, a, n)| xm[[a * d + s, n]]);
        state.schmidt_weights[site] = kept.clone();
        let cols = vt.ncols() / d;
        y = vt
            .into_shape_with_order((r * d, cols))
            .map_err(|e| ItebdError::InvalidParameter(e.to_string()))?;
        w = kept;
    }
    let last = sites[k - 1];
    let cl = y.nrows() / d;
    state.site_tensors[last] = Array3::from_shape_fn((d, cl, db), |(s, a, b)| y[[a * d + s, b]]);
    Ok(())
}

/// One full step: the gate on every window offset `0..k` in order.
pub fn itebd_sweep(state: &UnitCellState, gate: &EvolutionGate) -> Result<UnitCellState> {
    let k = state.k();
    if k < 2 {
        return Err(ItebdError::InvalidParameter(
            "cell must have at least two sites".into(),
        ));
    }
    if gate.k != k || gate.d != state.physical_dim() {
        return Err(ItebdError::InvalidParameter(format!(
            "gate on {} sites of dimension {} for a {k}-site cell of dimension {}",
            gate.k,
            gate.d,
            state.physical_dim()
        )));
    }
    let mut next = state.clone();
    for offset in 0..k {
        window_update(&mut next, &gate.matrix, offset)?;
    }
    Ok(next)
}

/// `Σ_i Σ_j (s_ij − s'_ij)²` with shorter vectors padded by zeros.
pub fn weight_change(a: &UnitCellState, b: &UnitCellState) -> f64 {
    a.schmidt_weights
        .iter()
        .zip(&b.schmidt_weights)
        .map(|(x, y)| {
            (0..x.len().max(y.len()))
                .map(|j| {
                    let u = x.get(j).copied().unwrap_or(0.0);
                    let v = y.get(j).copied().unwrap_or(0.0);
                    (u - v).powi(2)
                })
                .sum::<f64>()
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub steps: usize,
    pub e_history: Vec<f64>,
    pub e_tol: f64,
    pub converged: bool,
    pub seed: u64,
    pub dtau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub d_max: usize,
    pub dtau: f64,
    pub e_tol: f64,
    pub max_steps: usize,
    /// Evolve with `Π†` to target the left ground state.
    pub adjoint: bool,
    pub seed: u64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            d_max: 12,
            dtau: 5e-3,
            e_tol: 1e-14,
            max_steps: 200_000,
            adjoint: false,
            seed: 0,
        }
    }
}

impl EvolutionConfig {
    fn validate(&self) -> Result<()> {
        if self.d_max < 2 {
            return Err(ItebdError::InvalidParameter("D_max must be ≥ 2".into()));
        }
        if !(self.dtau.is_finite() && self.dtau > 0.0 && self.e_tol > 0.0) {
            return Err(ItebdError::InvalidParameter(
                "dtau and e_tol must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Sweeps until `e < e_tol` or `max_steps` total steps, appending to `trace`.
pub fn evolve(
    mut state: UnitCellState,
    gate: &EvolutionGate,
    trace: &mut ConvergenceTrace,
    max_steps: usize,
) -> Result<UnitCellState> {
    while trace.steps < max_steps {
        let next = itebd_sweep(&state, gate)?;
        let e = weight_change(&state, &next);
        state = next;
        trace.steps += 1;
        trace.e_history.push(e);
        if e < trace.e_tol {
            trace.converged = true;
            break;
        }
    }
    Ok(state)
}

/// Imaginary-time ground state of `Σ Π` (or `Σ Π†`) from a seeded random cell.
///
/// A run that reaches `max_steps` returns the partial state with
/// `converged = false`.
pub fn find_ground_state(
    p: &LocalProjector,
    config: &EvolutionConfig,
) -> Result<(UnitCellState, ConvergenceTrace)> {
    config.validate()?;
    let start = UnitCellState::random(p.k, p.d, config.d_max, config.seed)?;
    evolve_from(p, start, config)
}

/// As [`find_ground_state`] with an explicit starting cell.
pub fn evolve_from(
    p: &LocalProjector,
    start: UnitCellState,
    config: &EvolutionConfig,
) -> Result<(UnitCellState, ConvergenceTrace)> {
    config.validate()?;
    let p = if config.adjoint {
        p.adjoint()
    } else {
        p.clone()
    };
    let gate = make_gate(&p, config.dtau)?;
    let mut trace = ConvergenceTrace {
        steps: 0,
        e_history: Vec::new(),
        e_tol: config.e_tol,
        converged: false,
        seed: config.seed,
        dtau: config.dtau,
    };
    let state = evolve(start, &gate, &mut trace, config.max_steps)?;
    Ok((state, trace))
}

/// Resumable snapshot `{k, D_max, dtau, step, seed, site_tensors, schmidt_weights, e_history_tail}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub k: usize,
    #[serde(rename = "D_max")]
    pub d_max: usize,
    pub dtau: f64,
    pub e_tol: f64,
    pub step: usize,
    pub seed: u64,
    pub adjoint: bool,
    pub converged: bool,
    pub site_tensors: Vec<Vec<Vec<Vec<Pair>>>>,
    pub schmidt_weights: Vec<Vec<f64>>,
    pub e_history_tail: Vec<f64>,
}

impl Checkpoint {
    pub fn new(state: &UnitCellState, trace: &ConvergenceTrace, adjoint: bool) -> Self {
        let tail_start = trace.e_history.len().saturating_sub(HISTORY_TAIL);
        Self {
            k: state.k(),
            d_max: state.d_max,
            dtau: trace.dtau,
            e_tol: trace.e_tol,
            step: trace.steps,
            seed: trace.seed,
            adjoint,
            converged: trace.converged,
            site_tensors: state.site_tensors.iter().map(tensor_to_nested).collect(),
            schmidt_weights: state.schmidt_weights.clone(),
            e_history_tail: trace.e_history[tail_start..].to_vec(),
        }
    }

    /// The stored cell and a trace that continues the step count.
    pub fn restore(&self) -> Result<(UnitCellState, ConvergenceTrace)> {
        let tensors = self
            .site_tensors
            .iter()
            .map(|t| nested_to_tensor(t))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let state = UnitCellState::new(tensors, self.schmidt_weights.clone(), self.d_max)?;
        if state.k() != self.k {
            return Err(ItebdError::InvalidParameter("checkpoint k mismatch".into()));
        }
        let trace = ConvergenceTrace {
            steps: self.step,
            e_history: self.e_history_tail.clone(),
            e_tol: self.e_tol,
            converged: self.converged,
            seed: self.seed,
            dtau: self.dtau,
        };
        Ok((state, trace))
    }
}

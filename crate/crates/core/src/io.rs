//! JSON and CSV representations of states, projectors and spectra.

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::ed::{ChainBoundary, SpectrumReport};
use crate::linalg::{c, CMatrix, C64};
use crate::mps::{MpsError, UniformMps};
use crate::parent::LocalProjector;

/// A complex number as `[re, im]`.
pub type Pair = [f64; 2];

pub fn pair(z: C64) -> Pair {
    [z.re, z.im]
}

pub fn unpair(p: Pair) -> C64 {
    c(p[0], p[1])
}

pub fn matrix_to_nested(m: &CMatrix) -> Vec<Vec<Pair>> {
    m.rows()
        .into_iter()
        .map(|r| r.iter().map(|&z| pair(z)).collect())
        .collect()
}

pub fn nested_to_matrix(rows: &[Vec<Pair>]) -> Result<CMatrix, MpsError> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(MpsError::DimensionMismatch("ragged matrix rows".into()));
    }
    Ok(Array2::from_shape_fn((n, m), |(i, j)| unpair(rows[i][j])))
}

pub fn tensor_to_nested(t: &Array3<C64>) -> Vec<Vec<Vec<Pair>>> {
    t.outer_iter()
        .map(|m| {
            m.rows()
                .into_iter()
                .map(|r| r.iter().map(|&z| pair(z)).collect())
                .collect()
        })
        .collect()
}

pub fn nested_to_tensor(data: &[Vec<Vec<Pair>>]) -> Result<Array3<C64>, MpsError> {
    let d = data.len();
    let dl = data.first().map_or(0, Vec::len);
    let dr = data.first().and_then(|m| m.first()).map_or(0, Vec::len);
    if data
        .iter()
        .any(|m| m.len() != dl || m.iter().any(|r| r.len() != dr))
    {
        return Err(MpsError::DimensionMismatch("ragged tensor".into()));
    }
    Ok(Array3::from_shape_fn((d, dl, dr), |(i, a, b)| {
        unpair(data[i][a][b])
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexLabels {
    pub physical: Vec<String>,
    #[serde(rename = "virtual")]
    pub virtual_: Vec<String>,
}

impl IndexLabels {
    /// Spin-1 physical labels and `(↑, ↓)` virtual labels when the
    /// dimensions match, plain integers otherwise.
    pub fn for_dims(d: usize, dd: usize) -> Self {
        let physical = if d == 3 {
            vec!["+1".into(), "0".into(), "-1".into()]
        } else {
            (0..d).map(|i| i.to_string()).collect()
        };
        let virtual_ = if dd == 2 {
            vec!["up".into(), "down".into()]
        } else {
            (0..dd).map(|i| i.to_string()).collect()
        };
        Self { physical, virtual_ }
    }
}

/// `{d, D, tensor, labels}` with `tensor[i][a][b] = [re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpsFile {
    pub d: usize,
    #[serde(rename = "D")]
    pub bond_dim: usize,
    pub tensor: Vec<Vec<Vec<Pair>>>,
    pub labels: IndexLabels,
}

impl MpsFile {
    pub fn from_state(state: &UniformMps) -> Self {
        Self {
            d: state.physical_dim(),
            bond_dim: state.bond_dim(),
            tensor: tensor_to_nested(state.tensor()),
            labels: IndexLabels::for_dims(state.physical_dim(), state.bond_dim()),
        }
    }

    pub fn to_state(&self) -> Result<UniformMps, MpsError> {
        let t = nested_to_tensor(&self.tensor)?;
        if t.dim() != (self.d, self.bond_dim, self.bond_dim) {
            return Err(MpsError::DimensionMismatch(format!(
                "tensor {:?} does not match d = {}, D = {}",
                t.dim(),
                self.d,
                self.bond_dim
            )));
        }
        UniformMps::new(t)
    }
}

/// `{k, d, mu, matrix}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectorFile {
    pub k: usize,
    pub d: usize,
    pub mu: Option<f64>,
    pub matrix: Vec<Vec<Pair>>,
}

impl ProjectorFile {
    pub fn from_projector(p: &LocalProjector) -> Self {
        Self {
            k: p.k,
            d: p.d,
            mu: p.mu,
            matrix: matrix_to_nested(&p.matrix),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundSummary {
    pub energy: Pair,
    pub degeneracy: usize,
}

/// `{mu, n, k, boundary, eigenvalues, ground, gap}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFile {
    pub mu: f64,
    pub n: usize,
    pub k: usize,
    pub boundary: ChainBoundary,
    pub eigenvalues: Vec<Pair>,
    pub ground: GroundSummary,
    pub gap: Option<f64>,
}

impl SpectrumFile {
    pub fn new(mu: f64, n: usize, k: usize, boundary: ChainBoundary, r: &SpectrumReport) -> Self {
        Self {
            mu,
            n,
            k,
            boundary,
            eigenvalues: r.eigenvalues.iter().map(|&z| pair(z)).collect(),
            ground: GroundSummary {
                energy: pair(r.ground_energy),
                degeneracy: r.degeneracy,
            },
            gap: r.gap,
        }
    }
}

/// `{mu, weights, convention}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntanglementFile {
    pub mu: f64,
    pub weights: Vec<f64>,
    pub convention: String,
}

impl EntanglementFile {
    pub fn squared_schmidt(mu: f64, weights: Vec<f64>) -> Self {
        Self {
            mu,
            weights,
            convention: "squared-schmidt".into(),
        }
    }
}

/// 17 significant digits in scientific notation.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// `re+imj` with both parts at 17 significant digits.
pub fn fmt_complex(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:.16e}{sign}{:.16e}j", z.re, z.im.abs())
}

//! Spin-1 operators in the `S_z = (+1, 0, −1)` basis.

use ndarray::array;

use crate::linalg::{c, cr, CMatrix};

/// The spin-1 operator set.
#[derive(Debug, Clone)]
pub struct SpinOperatorSet {
    pub sx: CMatrix,
    pub sy: CMatrix,
    pub sz: CMatrix,
    pub splus: CMatrix,
    pub sminus: CMatrix,
}

impl SpinOperatorSet {
    pub fn spin1() -> Self {
        let r = 1.0 / 2f64.sqrt();
        let z = cr(0.0);
        let sx = array![[z, cr(r), z], [cr(r), z, cr(r)], [z, cr(r), z]];
        let sy = array![
            [z, c(0.0, -r), z],
            [c(0.0, r), z, c(0.0, -r)],
            [z, c(0.0, r), z]
        ];
        let sz = array![[cr(1.0), z, z], [z, z, z], [z, z, cr(-1.0)]];
        let s2 = cr(2f64.sqrt());
        let splus = array![[z, s2, z], [z, z, s2], [z, z, z]];
        let sminus = array![[z, z, z], [s2, z, z], [z, s2, z]];
        Self {
            sx,
            sy,
            sz,
            splus,
            sminus,
        }
    }

    /// Anticommutator `a·b + b·a`.
    pub fn anti(a: &CMatrix, b: &CMatrix) -> CMatrix {
        a.dot(b) + b.dot(a)
    }

    /// `e^{iπ S_z}` written out exactly.
    pub fn z_parity(&self) -> CMatrix {
        CMatrix::from_diag(&ndarray::arr1(&[cr(-1.0), cr(1.0), cr(-1.0)]))
    }

    /// `e^{−iπ S_y}`, the spin-1 rotation by π about y, written out exactly.
    pub fn y_rotation_pi(&self) -> CMatrix {
        let z = cr(0.0);
        array![[z, z, cr(1.0)], [z, cr(-1.0), z], [cr(1.0), z, z]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigh, max_abs, max_abs_diff};

    #[test]
    fn commutation_and_ladder_relations() {
        let s = SpinOperatorSet::spin1();
        let comm = s.sx.dot(&s.sy) - s.sy.dot(&s.sx);
        assert!(max_abs_diff(&comm, &s.sz.mapv(|x| x * c(0.0, 1.0))) < 1e-14);
        let sp = &s.sx + &s.sy.mapv(|x| x * c(0.0, 1.0));
        let sm = &s.sx - &s.sy.mapv(|x| x * c(0.0, 1.0));
        assert!(max_abs_diff(&sp, &s.splus) < 1e-14);
        assert!(max_abs_diff(&sm, &s.sminus) < 1e-14);
    }

    #[test]
    fn y_rotation_matches_spectral_exponential() {
        let s = SpinOperatorSet::spin1();
        let (vals, vecs) = eigh(&s.sy).unwrap();
        let phases = ndarray::Array1::from(
            vals.iter()
                .map(|&v| c(0.0, -std::f64::consts::PI * v).exp())
                .collect::<Vec<_>>(),
        );
        let exp = vecs
            .dot(&CMatrix::from_diag(&phases))
            .dot(&crate::linalg::dagger(&vecs));
        assert!(max_abs_diff(&exp, &s.y_rotation_pi()) < 1e-12);
    }

    #[test]
    fn z_parity_is_exponential_of_sz() {
        let s = SpinOperatorSet::spin1();
        let diag: Vec<_> = (0..3)
            .map(|i| c(0.0, std::f64::consts::PI * s.sz[[i, i]].re).exp())
            .collect();
        let exp = CMatrix::from_diag(&ndarray::Array1::from(diag));
        assert!(max_abs(&(exp - s.z_parity())) < 1e-15);
    }
}

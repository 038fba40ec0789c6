//! Checks against independently computed references.

use ndarray::Array2;

use nhph_core::itebd::{find_ground_state, make_gate, EvolutionConfig};
use nhph_core::linalg::{
    cr, eigenvalues, identity, kron, max_abs, max_abs_diff, singular_values, CMatrix, SortMode, C64,
};
use nhph_core::mps::{asymmetric_aklt, materialize, transfer_matrix, Boundary, StatePair};
use nhph_core::observables::{entanglement_spectrum, infidelity_per_site, string_order, Mode};
use nhph_core::parent::build_projector;
use nhph_core::spin::SpinOperatorSet;

fn expm(a: &CMatrix) -> CMatrix {
    let norm = max_abs(a) * a.nrows() as f64;
    let squarings = norm.log2().ceil().max(0.0) as i32 + 4;
    let scaled = a.mapv(|z| z / 2f64.powi(squarings));
    let mut term = identity(a.nrows());
    let mut sum = term.clone();
    for n in 1..30 {
        term = term.dot(&scaled).mapv(|z| z / n as f64);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = sum.dot(&sum);
    }
    sum
}

/// Faddeev–LeVerrier coefficients `c_0 … c_n` of `det(x − A)`, `c_n = 1`.
fn characteristic_polynomial(a: &CMatrix) -> Vec<C64> {
    let n = a.nrows();
    let mut coeffs = vec![cr(0.0); n + 1];
    coeffs[n] = cr(1.0);
    let mut m = CMatrix::zeros((n, n));
    for k in 1..=n {
        m = a.dot(&m) + identity(n).mapv(|z| z * coeffs[n - k + 1]);
        let am = a.dot(&m);
        coeffs[n - k] = -am.diag().sum() / k as f64;
    }
    coeffs
}

#[test]
fn isotropic_projector_is_total_spin_two() {
    let s = SpinOperatorSet::spin1();
    let id = identity(3);
    let total = |op: &CMatrix| kron(op, &id) + kron(&id, op);
    let (x, y, z) = (total(&s.sx), total(&s.sy), total(&s.sz));
    let s2 = x.dot(&x) + y.dot(&y) + z.dot(&z);
    let shifted = &s2 - &identity(9).mapv(|w| w * 2.0);
    let spin_two = s2.dot(&shifted).mapv(|w| w / 24.0);
    let p = build_projector(&StatePair::asymmetric_aklt(1.0).unwrap(), 2).unwrap();
    assert!(max_abs_diff(&p.matrix, &spin_two) < 1e-12);
}

#[test]
fn gate_matches_matrix_exponential() {
    for mu in [0.5, 2.0] {
        let p = build_projector(&StatePair::asymmetric_aklt(mu).unwrap(), 2).unwrap();
        for dtau in [5e-3, 0.3] {
            let gate = make_gate(&p, dtau).unwrap();
            let reference = expm(&p.matrix.mapv(|z| z * -dtau));
            assert!(max_abs_diff(&gate.matrix, &reference) < 1e-12);
        }
    }
}

#[test]
fn transfer_characteristic_polynomial() {
    let mu = 0.2;
    let pair = StatePair::asymmetric_aklt(mu).unwrap();
    let e = transfer_matrix(&pair.left, &pair.right).unwrap();
    let got = characteristic_polynomial(&e.matrix);
    let mut expected = vec![cr(1.0)];
    for root in [0.5, -1.5 * mu, 0.5 * mu, 0.5 * mu * mu] {
        let mut next = vec![cr(0.0); expected.len() + 1];
        for (i, &a) in expected.iter().enumerate() {
            next[i + 1] += a;
            next[i] -= a * root;
        }
        expected = next;
    }
    for (a, b) in got.iter().zip(&expected) {
        assert!((a - b).norm() < 1e-14, "{a} vs {b}");
    }
    let vals = eigenvalues(&e.matrix, SortMode::DescendingModulus).unwrap();
    for v in vals {
        let p: C64 = got.iter().rev().fold(cr(0.0), |acc, &c| acc * v + c);
        assert!(p.norm() < 1e-14);
    }
}

#[test]
fn finite_chain_schmidt_spectrum() {
    let n = 10;
    for mu in [0.5, 1.0, 2.0] {
        let state = asymmetric_aklt(mu).unwrap();
        let psi = materialize(&state, n, &Boundary::open_basis(2, 0, 1)).unwrap();
        let half = 3usize.pow(n as u32 / 2);
        let m = Array2::from_shape_vec((half, half), psi.to_vec()).unwrap();
        let s = singular_values(&m).unwrap();
        let total: f64 = s.iter().map(|x| x * x).sum();
        let finite: Vec<f64> = s.iter().map(|x| x * x / total).collect();
        let infinite = entanglement_spectrum(&state).unwrap();
        assert!(finite[2] < 1e-12);
        for j in 0..2 {
            assert!(
                (finite[j] - infinite[j]).abs() < 2e-3,
                "μ={mu}: {finite:?} vs {infinite:?}"
            );
        }
    }
}

#[test]
fn adjoint_evolution_targets_reciprocal_state() {
    let mu = 2.0;
    let p = build_projector(&StatePair::asymmetric_aklt(mu).unwrap(), 2).unwrap();
    let config = EvolutionConfig {
        adjoint: true,
        ..EvolutionConfig::default()
    };
    let (state, trace) = find_ground_state(&p, &config).unwrap();
    assert!(trace.converged);
    let u = state.to_uniform().unwrap();
    let to_reciprocal = infidelity_per_site(&asymmetric_aklt(1.0 / mu).unwrap(), &u, 2).unwrap();
    let to_original = infidelity_per_site(&asymmetric_aklt(mu).unwrap(), &u, 2).unwrap();
    assert!(to_reciprocal < 1e-6, "η = {to_reciprocal}");
    assert!(to_original > 1e-3, "η = {to_original}");
    let w = entanglement_spectrum(&u).unwrap();
    let exact = entanglement_spectrum(&asymmetric_aklt(1.0 / mu).unwrap()).unwrap();
    assert!((w[0] - exact[0]).abs() < 1e-6 && (w[1] - exact[1]).abs() < 1e-6);
}

#[test]
fn weight_change_decays_before_convergence() {
    let p = build_projector(&StatePair::asymmetric_aklt(1.0).unwrap(), 2).unwrap();
    let (_, trace) = find_ground_state(&p, &EvolutionConfig::default()).unwrap();
    assert!(trace.converged);
    let h = &trace.e_history;
    let tail = &h[h.len() / 2..];
    for w in tail.windows(200).step_by(200) {
        assert!(w[199] < w[0]);
    }
    assert!(h.last().unwrap() < &trace.e_tol);
}

#[test]
fn right_right_string_order_saturates() {
    let a = string_order(2.0, 40, Mode::Rr).unwrap();
    let b = string_order(2.0, 80, Mode::Rr).unwrap();
    assert!(a.norm() > 1e-3);
    assert!((a - b).norm() < 1e-10);
}

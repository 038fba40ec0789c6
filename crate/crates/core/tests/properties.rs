use ndarray::Array3;
use proptest::prelude::*;

use nhph_core::ed::{aklt_chain, full_spectrum, spectral_distance, ChainBoundary, CLUSTER_TOL};
use nhph_core::linalg::{
    c, cr, eigenvalues, rank_tol, singular_values, solve_or_invert, svd, CMatrix, SortMode, C64,
    RANK_TOL,
};
use nhph_core::mps::{expectation_rr, transfer_matrix, StatePair, UniformMps};
use nhph_core::observables::{order_parameters, Mode, OrderOperators};
use nhph_core::parent::{blocked_map, criterion_biorthogonal, criterion_direct_sum, Side};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

fn complex_vec(n: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
        .prop_map(|v| v.into_iter().map(|(re, im)| c(re, im)).collect())
}

fn matrix(n: usize, m: usize) -> impl Strategy<Value = CMatrix> {
    complex_vec(n * m).prop_map(move |v| CMatrix::from_shape_vec((n, m), v).unwrap())
}

fn unitary(n: usize) -> impl Strategy<Value = CMatrix> {
    matrix(n, n).prop_map(|m| svd(&m).unwrap().u)
}

fn random_mps(d: usize, dd: usize) -> impl Strategy<Value = UniformMps> {
    complex_vec(d * dd * dd).prop_map(move |v| {
        UniformMps::new(Array3::from_shape_vec((d, dd, dd), v).unwrap()).unwrap()
    })
}

/// Log-uniform μ away from the critical points 1/3 and 3.
fn mu_off_critical() -> impl Strategy<Value = f64> {
    (-2.3f64..2.3)
        .prop_map(f64::exp)
        .prop_filter("near a critical point", |mu| {
            (mu * 3.0 - 1.0).abs() > 0.05 && (mu - 3.0).abs() > 0.15
        })
}

fn sorted_moduli(v: &[C64]) -> Vec<f64> {
    let mut m: Vec<f64> = v.iter().map(|z| z.norm()).collect();
    m.sort_by(f64::total_cmp);
    m
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn rank_is_unitarily_invariant(a in matrix(6, 3), b in matrix(3, 6), u in unitary(6), v in unitary(6)) {
        let m = a.dot(&b);
        prop_assert_eq!(rank_tol(&m, RANK_TOL), 3);
        prop_assert_eq!(rank_tol(&u.dot(&m).dot(&v), RANK_TOL), 3);
    }

    #[test]
    fn singular_values_are_unitarily_invariant(m in matrix(5, 5), u in unitary(5), v in unitary(5)) {
        let s = singular_values(&m).unwrap();
        let t = singular_values(&u.dot(&m).dot(&v)).unwrap();
        for (x, y) in s.iter().zip(&t) {
            prop_assert!((x - y).abs() < 1e-12 * s[0].max(1.0));
        }
    }

    #[test]
    fn transfer_spectrum_matches_closed_form(mu in 0.01f64..3.5) {
        let pair = StatePair::asymmetric_aklt(mu).unwrap();
        let e = transfer_matrix(&pair.left, &pair.right).unwrap();
        let vals = eigenvalues(&e.matrix, SortMode::DescendingModulus).unwrap();
        let expected = [cr(0.5), cr(-1.5 * mu), cr(0.5 * mu), cr(0.5 * mu * mu)];
        prop_assert!(spectral_distance(&vals, &expected, 0.0).unwrap() < 1e-10);
    }

    #[test]
    fn transfer_spectrum_is_gauge_covariant(state in random_mps(3, 3), g in matrix(3, 3)) {
        let g = g + CMatrix::eye(3).mapv(|z| z * 2.0);
        let g_inv = solve_or_invert(&g, 1e-8).unwrap();
        let moved = state.gauge(&g, &g_inv).unwrap();
        let before = eigenvalues(&transfer_matrix(&state, &state).unwrap().matrix, SortMode::DescendingModulus).unwrap();
        let after = eigenvalues(&transfer_matrix(&moved, &moved).unwrap().matrix, SortMode::DescendingModulus).unwrap();
        let a = sorted_moduli(&before);
        let b = sorted_moduli(&after);
        let scale = a.last().copied().unwrap_or(1.0).max(1.0);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-8 * scale);
        }
    }

    #[test]
    fn existence_criteria_agree(right in random_mps(3, 2), left in random_mps(3, 2), k in 2usize..4) {
        let r = blocked_map(&right, k, Side::Right).unwrap();
        let l = blocked_map(&left, k, Side::Left).unwrap();
        prop_assert_eq!(
            criterion_direct_sum(&l, &r).unwrap(),
            criterion_biorthogonal(&l, &r).unwrap()
        );
    }

    #[test]
    fn rr_chiral_order_is_imaginary(state in random_mps(3, 2)) {
        let ops = OrderOperators::spin1();
        let chiral = &ops.right - &ops.left;
        let v = expectation_rr(&state, &chiral, 2).unwrap();
        prop_assert!(v.re.abs() < 1e-10 * v.norm().max(1.0));
    }

    #[test]
    fn lr_chiral_order_is_centrosymmetric(mu in mu_off_critical()) {
        let a = order_parameters(mu, Mode::Lr).unwrap().o_chiral;
        let b = order_parameters(1.0 / mu, Mode::Lr).unwrap().o_chiral;
        prop_assert!((a + b).norm() < 1e-10);
    }

    #[test]
    fn lr_chiral_order_changes_sign_at_one(mu in 0.34f64..2.9) {
        prop_assume!((mu - 1.0).abs() > 1e-3);
        let v = order_parameters(mu, Mode::Lr).unwrap().o_chiral;
        prop_assert_eq!(v.re > 0.0, mu > 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn reciprocal_chains_have_conjugate_spectra(mu in 0.2f64..5.0, periodic in any::<bool>()) {
        let boundary = if periodic { ChainBoundary::Periodic } else { ChainBoundary::Open };
        let a = full_spectrum(&aklt_chain(mu, 2, 4, boundary).unwrap(), CLUSTER_TOL).unwrap();
        let b = full_spectrum(&aklt_chain(1.0 / mu, 2, 4, boundary).unwrap(), CLUSTER_TOL).unwrap();
        let conj: Vec<C64> = b.eigenvalues.iter().map(|z| z.conj()).collect();
        prop_assert!(spectral_distance(&a.eigenvalues, &conj, 1e-9).unwrap() < 1e-9);
    }

    #[test]
    fn chain_spectra_are_closed_under_conjugation(mu in 0.1f64..10.0) {
        let r = full_spectrum(&aklt_chain(mu, 2, 4, ChainBoundary::Periodic).unwrap(), CLUSTER_TOL).unwrap();
        let conj: Vec<C64> = r.eigenvalues.iter().map(|z| z.conj()).collect();
        prop_assert!(spectral_distance(&r.eigenvalues, &conj, 1e-9).unwrap() < 1e-9);
    }
}

use mestim::coherence::exact::{self, ratio};
use mestim::coherence::{
    coherent_pd_check, conditional_variance, eigen_sufficiency, linear_toeplitz, min_eigenvalue, schur_diagonal,
    toeplitz_cofactors, toeplitz_conditional_variance, CoherenceMode,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

#[test]
fn closed_form_cofactors_match_exact_elimination() {
    for p in 3..=7 {
        let (c, d) = (ratio(7, 4), ratio(1, 10));
        let a = exact::linear_toeplitz(&c, &d, p);
        let (cof, det) = exact::cofactor_closed_form(&c, &d, p);
        assert_eq!(det, exact::determinant(&a), "p = {p}");
        for i in 0..p {
            for j in 0..p {
                assert_eq!(cof[i][j], exact::cofactor(&a, i, j), "p = {p}, ({i}, {j})");
            }
        }
        let float = toeplitz_cofactors(1.75, 0.1, p).unwrap();
        assert!((float.determinant - exact::to_f64(&det)).abs() < 1e-12);
    }
}

#[test]
fn conditional_variance_formula_matches_the_schur_complement() {
    for p in 2..=9 {
        let sigma = linear_toeplitz(1.75, 0.1, p + 1).unwrap();
        let direct = conditional_variance(&sigma, 0).unwrap();
        let formula = toeplitz_conditional_variance(1.75, 0.1, p).unwrap();
        assert!((direct - formula).abs() < 1e-10, "p = {p}: {direct} vs {formula}");
    }
}

#[test]
fn float_minimum_agrees_with_the_exact_minimum() {
    for size in [3, 5, 8] {
        let sigma = linear_toeplitz(1.75, 0.1, size).unwrap();
        let float = coherent_pd_check(&sigma, 0.0, CoherenceMode::Exhaustive).unwrap();
        let (exact_min, _) = exact::min_schur_diagonal(&exact::linear_toeplitz(&ratio(7, 4), &ratio(1, 10), size)).unwrap();
        assert!((float.min_schur_diag - exact::to_f64(&exact_min)).abs() < 1e-10, "size {size}");
    }
}

#[test]
fn sampled_mode_covers_singletons() {
    let sigma = linear_toeplitz(1.75, 0.1, 20).unwrap();
    let r = coherent_pd_check(&sigma, 0.0, CoherenceMode::Sampled { subsets: 50, seed: 1 }).unwrap();
    assert!(!r.exhaustive);
    assert!(r.subsets_checked >= 40);
}

#[test]
fn failing_check_reports_a_witness() {
    let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.9, 0.9, 1.0]);
    let r = coherent_pd_check(&sigma, 0.5, CoherenceMode::Exhaustive).unwrap();
    assert!(!r.pass);
    // Conditional variance of either row is 1 - 0.81.
    assert!((r.min_schur_diag - 0.19).abs() < 1e-12);
    assert!(r.witness.is_some());
}

fn spd(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-2.0..2.0f64, n * n).prop_map(move |v| {
        let b = DMatrix::from_vec(n, n, v);
        &b * b.transpose() + DMatrix::identity(n, n) * 0.2
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn minimum_is_invariant_under_relabelling(a in spd(6), shift in 1usize..6) {
        let perm: Vec<usize> = (0..6).map(|i| (i + shift) % 6).collect();
        let b = DMatrix::from_fn(6, 6, |i, j| a[(perm[i], perm[j])]);
        let ra = coherent_pd_check(&a, 0.0, CoherenceMode::Exhaustive).unwrap();
        let rb = coherent_pd_check(&b, 0.0, CoherenceMode::Exhaustive).unwrap();
        prop_assert!((ra.min_schur_diag - rb.min_schur_diag).abs() <= 1e-10 * ra.min_schur_diag.abs().max(1.0));
    }

    #[test]
    fn eigenvalue_floor_implies_coherence(a in spd(5)) {
        let lam = min_eigenvalue(&a);
        prop_assert!(eigen_sufficiency(&a, lam * 0.999));
        let r = coherent_pd_check(&a, lam * 0.999, CoherenceMode::Exhaustive).unwrap();
        prop_assert!(r.pass);
        prop_assert!(r.min_schur_diag >= lam * (1.0 - 1e-9));
    }

    #[test]
    fn schur_entries_never_exceed_the_diagonal(a in spd(5), mask in 1u32..31) {
        let subset: Vec<usize> = (0..5).filter(|i| mask >> i & 1 == 1).collect();
        let (d, _) = schur_diagonal(&a, &subset).unwrap();
        for (k, &i) in subset.iter().enumerate() {
            prop_assert!(d[k] <= a[(i, i)] * (1.0 + 1e-12));
            prop_assert!(d[k] > 0.0);
        }
    }
}

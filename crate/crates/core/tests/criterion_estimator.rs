use std::sync::Arc;

use mestim::criterion::{criterion_table, Table};
use mestim::estimator::{m_estimate, profile_argmax, profile_values, replicate_indices, sieve_grid};
use mestim::grid::Axis;
use mestim::*;
use proptest::prelude::*;

#[test]
fn documented_evaluations() {
    let cube = CriterionSpec::cube_root();
    assert_eq!(evaluate_criterion(&cube, &[0.5], &Observation::Scalar(0.3)).unwrap(), 1.0);
    assert_eq!(evaluate_criterion(&cube, &[0.0], &Observation::Scalar(1.4)).unwrap(), 0.0);
    let lad = CriterionSpec::lad(2.0, 2.0).unwrap();
    assert_eq!(evaluate_criterion(&lad, &[0.5], &Observation::Pair { x: 1.0, y: 1.0 }).unwrap(), 0.5);

    let grid = ParameterGrid::interval(0.0, 0.5, 2).unwrap();
    let data = SampleSet::scalars(&[0.3, 1.4]).unwrap();
    assert_eq!(empirical_criterion(&cube, &grid, &data).unwrap(), vec![0.5, 1.0]);
}

#[test]
fn tabulated_criterion_reads_the_table() {
    let table = Table::from_rows(&[vec![1.0, 2.0], vec![3.0, 5.0]]).unwrap();
    let spec = CriterionSpec::tabulated(table);
    let grid = ParameterGrid::interval(0.0, 1.0, 2).unwrap();
    let data = SampleSet::indices(&[0, 1, 1]).unwrap();
    let q = empirical_criterion(&spec, &grid, &data).unwrap();
    assert!((q[0] - 5.0 / 3.0).abs() < 1e-15);
    assert!((q[1] - 13.0 / 3.0).abs() < 1e-15);
    assert!(empirical_criterion(&spec, &grid, &SampleSet::indices(&[2]).unwrap()).is_err());
}

#[test]
fn lad_minimises_absolute_deviation() {
    // Median of {0.1, 0.2, 0.9} is 0.2; the nearest grid point is 0.25.
    let spec = CriterionSpec::lad(1.0, 1.0).unwrap();
    let grid = ParameterGrid::interval(-1.0, 1.0, 9).unwrap();
    let data = SampleSet::pairs(&[(1.0, 0.1), (1.0, 0.2), (1.0, 0.9)]).unwrap();
    assert_eq!(grid.point(m_estimate(&spec, &grid, &data).unwrap()), &[0.25]);
}

#[test]
fn profiling_picks_the_row_of_the_joint_maximum() {
    let spec = CriterionSpec::lad(3.0, 1.0).unwrap();
    let grid = ParameterGrid::product(vec![
        Axis::linspace("slope", -1.0, 1.0, 5).unwrap(),
        Axis::linspace("intercept", -1.0, 1.0, 5).unwrap(),
    ])
    .unwrap();
    let data = SampleSet::pairs(&[(0.0, 0.5), (1.0, 1.0), (0.5, 0.75)]).unwrap();
    let joint = m_estimate(&spec, &grid, &data).unwrap();
    assert_eq!(profile_argmax(&spec, &grid, &data).unwrap(), joint / 5);
    assert_eq!(grid.point(joint), &[0.5, 0.5]);
}

#[test]
fn sieve_lad_evaluates_the_basis_expansion() {
    let spec = CriterionSpec::lad(5.0, 1.0).unwrap().with_sieve(mestim::criterion::TrigBasis::new(2).unwrap()).unwrap();
    let grid = sieve_grid(2, (-1.0, 1.0), 3).unwrap();
    assert_eq!(grid.len(), 9);
    let data = SampleSet::pairs(&[(0.3, 0.0)]).unwrap();
    let table = criterion_table(&spec, &grid, &data).unwrap();
    // Zero coefficients predict zero.
    assert_eq!(table[4], 0.0);
}

#[test]
fn replication_is_deterministic_and_schedule_free() {
    let spec = CriterionSpec::cube_root();
    let grid = Arc::new(ParameterGrid::interval(0.0, 1.0, 21).unwrap());
    let gen = DataGenSpec::new(DataLaw::Uniform { lo: -1.5, hi: 2.5 }, 50).unwrap();
    let a = replicate_indices(&spec, &grid, &gen, 500, 11, Execution::Sequential).unwrap();
    let b = replicate_indices(&spec, &grid, &gen, 500, 11, Execution::Parallel).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, replicate_indices(&spec, &grid, &gen, 500, 12, Execution::Sequential).unwrap());
}

#[test]
fn incompatible_law_is_rejected() {
    let spec = CriterionSpec::lad(1.0, 1.0).unwrap();
    let grid = Arc::new(ParameterGrid::interval(0.0, 1.0, 3).unwrap());
    let wide = DataGenSpec::new(DataLaw::LadPair { theta0: 0.0, intercept: 0.0, x_lo: 1.0, x_hi: 1.0, noise_half_width: 2.0 }, 10).unwrap();
    assert!(replicate_indices(&spec, &grid, &wide, 10, 1, Execution::Sequential).is_err());
    let scalar = DataGenSpec::new(DataLaw::Uniform { lo: 0.0, hi: 1.0 }, 10).unwrap();
    assert!(replicate_indices(&spec, &grid, &scalar, 10, 1, Execution::Sequential).is_err());
}

fn lad_pairs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -2.0..2.0f64), 1..30)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn lad_values_respect_the_envelope(pairs in lad_pairs(), lo in -2.0..0.0f64, hi in 0.1..2.0f64) {
        let spec = CriterionSpec::lad(2.0, 1.0).unwrap();
        let grid = ParameterGrid::interval(lo, hi, 7).unwrap();
        let data = SampleSet::pairs(&pairs).unwrap();
        let env = spec.envelope(&grid);
        for v in criterion_table(&spec, &grid, &data).unwrap() {
            prop_assert!(v.abs() <= env + 1e-12);
        }
    }

    #[test]
    fn estimate_ignores_observation_order(pairs in lad_pairs(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let spec = CriterionSpec::lad(2.0, 1.0).unwrap();
        let grid = ParameterGrid::interval(-1.0, 1.0, 11).unwrap();
        let data = SampleSet::pairs(&pairs).unwrap();
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        order.shuffle(&mut mestim::exec::stream_rng(seed, 0));
        let shuffled = data.permuted(&order).unwrap();
        // Sums in a different order may differ in the last bit; compare criterion values.
        let a = empirical_criterion(&spec, &grid, &data).unwrap();
        let b = empirical_criterion(&spec, &grid, &shuffled).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn argmax_is_invariant_under_increasing_affine_maps(
        values in prop::collection::vec(-100i32..100, 1..40),
        scale in 1u32..8,
        shift in -50i32..50,
    ) {
        // Integer-valued inputs keep the affine map exact in floating point.
        let v: Vec<f64> = values.iter().map(|&x| x as f64).collect();
        let w: Vec<f64> = v.iter().map(|&x| scale as f64 * x + shift as f64).collect();
        prop_assert_eq!(argmax_index(&v).unwrap(), argmax_index(&w).unwrap());
    }

    #[test]
    fn profiling_agrees_with_the_flattened_argmax(values in prop::collection::vec(-5i32..5, 12)) {
        let v: Vec<f64> = values.iter().map(|&x| x as f64).collect();
        let flat = argmax_index(&v).unwrap();
        prop_assert_eq!(profile_values(&v, 3, 4).unwrap(), flat / 4);
    }

    #[test]
    fn cube_root_values_are_indicators(theta in -3.0..3.0f64, z in -5.0..5.0f64) {
        let v = evaluate_criterion(&CriterionSpec::cube_root(), &[theta], &Observation::Scalar(z)).unwrap();
        prop_assert!(v == 0.0 || v == 1.0);
        prop_assert_eq!(v == 1.0, (z - theta).abs() <= 1.0);
    }
}

use std::sync::Arc;

use mestim::gaussian::analytic_model;
use mestim::grid::Axis;
use mestim::io::*;
use mestim::*;
use proptest::prelude::*;

#[test]
fn grid_round_trips_with_a_comment() {
    let grid = ParameterGrid::product(vec![
        Axis::linspace("slope", -1.0, 1.0, 3).unwrap(),
        Axis::linspace("intercept", 0.0, 0.3, 4).unwrap(),
    ])
    .unwrap();
    let mut buf = Vec::new();
    write_grid(&mut buf, &grid, Some("config_hash=abc, seed=1")).unwrap();
    assert!(String::from_utf8_lossy(&buf).starts_with("# config_hash=abc, seed=1\n"));
    let back = read_grid(buf.as_slice()).unwrap();
    assert_eq!(back.points(), grid.points());
    assert_eq!(back.labels(), grid.labels());
}

#[test]
fn model_and_distribution_exports_have_one_row_per_cell() {
    let grid = Arc::new(ParameterGrid::interval(0.0, 1.0, 4).unwrap());
    let model = analytic_model(&CriterionSpec::cube_root(), &grid).unwrap();
    let mut buf = Vec::new();
    write_model(&mut buf, &model, None).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 5);

    let d = ArgmaxDistribution::from_counts(vec![1, 0, 2, 1], 3, grid.clone()).unwrap();
    let mut buf = Vec::new();
    write_distribution(&mut buf, &d, Some("x")).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().nth(1).unwrap().contains("count"));
}

#[test]
fn malformed_input_is_an_error() {
    assert!(read_samples("z\nabc\n".as_bytes()).is_err());
    assert!(read_replications("replication,index\n0,x\n".as_bytes()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scalar_samples_round_trip_exactly(values in prop::collection::vec(-1e6..1e6f64, 1..50)) {
        let s = SampleSet::scalars(&values).unwrap();
        let mut buf = Vec::new();
        write_samples(&mut buf, &s, Some("stamp")).unwrap();
        prop_assert_eq!(read_samples(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn pair_samples_round_trip_exactly(values in prop::collection::vec((-1.0..1.0f64, -3.0..3.0f64), 1..50)) {
        let s = SampleSet::pairs(&values).unwrap();
        let mut buf = Vec::new();
        write_samples(&mut buf, &s, None).unwrap();
        prop_assert_eq!(read_samples(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn replications_round_trip(indices in prop::collection::vec(0usize..7, 1..100)) {
        let grid = ParameterGrid::interval(0.0, 1.0, 7).unwrap();
        let mut buf = Vec::new();
        write_replications(&mut buf, &indices, &grid, None).unwrap();
        prop_assert_eq!(read_replications(buf.as_slice()).unwrap(), indices);
    }
}

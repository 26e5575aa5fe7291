use std::sync::Arc;

use mestim::gaussian::analytic_model;
use mestim::theory::*;
use mestim::*;
use proptest::prelude::*;

#[test]
fn zero_dimensional_entropy_integral_is_the_radius() {
    let flat = entropy_integral(&EntropySpec::EuclideanCompact { dim: 0.0, diameter: 1.0 }, 0.4).unwrap();
    assert!((flat - 0.4).abs() < 1e-13);
}

#[test]
fn euclidean_entropy_integral_matches_direct_quadrature() {
    use mestim::quadrature::integrate;
    // The integrand has only a logarithmic singularity; integrate away from zero and
    // bound the neglected piece by its crude maximum.
    let spec = EntropySpec::EuclideanCompact { dim: 2.0, diameter: 1.5 };
    let cut = 1e-12;
    let direct = integrate(|d| (1.0 + spec.entropy(d)).sqrt(), cut, 0.8, 1e-13).value;
    let j = entropy_integral(&spec, 0.8).unwrap();
    assert!((j - direct).abs() < 1e-9, "{j} vs {direct}");
}

#[test]
fn power_law_entropy_integral_matches_a_closed_form() {
    // alpha = 1, scale = 1: int_0^1 sqrt(1 + 1/d) dd = sqrt(2) + asinh(1).
    let j = entropy_integral(&EntropySpec::PowerLaw { alpha: 1.0, scale: 1.0 }, 1.0).unwrap();
    let expected = 2f64.sqrt() + (1.0 + 2f64.sqrt()).ln();
    assert!((j - expected).abs() < 1e-11, "{j} vs {expected}");
}

#[test]
fn entropy_inputs_are_validated() {
    assert!(entropy_integral(&EntropySpec::PowerLaw { alpha: 2.0, scale: 1.0 }, 0.5).is_err());
    assert!(entropy_integral(&EntropySpec::PowerLaw { alpha: 1.0, scale: 1.0 }, 1.5).is_err());
    assert!(entropy_integral(&EntropySpec::PowerLaw { alpha: 1.0, scale: 1.0 }, 0.0).is_err());
}

#[test]
fn rates_pick_the_smallest_exponent() {
    let finite = rate_bound(&RateSpec::new(RateRegime::FiniteDim), 1e4).unwrap();
    assert_eq!(finite.exponent, 0.625);
    assert!((finite.value - 1e4f64.powf(-0.625) * 1e4f64.ln()).abs() < 1e-15);

    let spec = RateSpec::new(RateRegime::InfiniteDim { alpha: 0.5, kappa: 0.25 });
    let r = rate_bound(&spec, 1e4).unwrap();
    assert_eq!(r.binding, "coupling");
    assert!((r.exponent - 13.0 / 24.0).abs() < 1e-15);

    let entropy_bound = rate_bound(&RateSpec::new(RateRegime::InfiniteDim { alpha: 1.5, kappa: 0.1 }), 1e4).unwrap();
    assert_eq!(entropy_bound.binding, "entropy");
}

#[test]
fn rate_preconditions_are_enforced() {
    for (alpha, kappa) in [(0.0, 0.5), (2.0, 0.1), (0.5, 1.0), (1.2, 0.5)] {
        assert!(rate_bound(&RateSpec::new(RateRegime::InfiniteDim { alpha, kappa }), 1e4).is_err());
    }
    assert!(rate_bound(&RateSpec::new(RateRegime::FiniteDim), 1.0).is_err());
}

#[test]
fn soft_step_is_a_monotone_ramp() {
    let delta = 0.1;
    assert_eq!(soft_step(-0.2, delta), 0.0);
    assert_eq!(soft_step(0.0, delta), 1.0);
    let mut prev = 0.0;
    for k in 0..=200 {
        let z = -delta + delta * k as f64 / 200.0;
        let v = soft_step(z, delta);
        assert!(v >= prev - 1e-15);
        prev = v;
    }
    // Away from the ends the mollified ramp is the linear ramp rescaled.
    let u = 0.5;
    assert!((soft_step(-delta + u * delta, delta) - (u - 2.5e-4) / (1.0 - 5e-4)).abs() < 1e-9);
}

#[test]
fn sweeps_pass() {
    assert!(softmax_sandwich_sweep(2000, 1).unwrap().pass);
    assert!(soft_step_sweep(2000, 1).pass);
}

#[test]
fn derivative_sums_stay_near_their_bound() {
    let r = derivative_bound_check(5, 2.0, 0.5, &[0, 2], 50, 3).unwrap();
    assert!(r.within_bound, "{r:?}");
}

#[test]
fn anti_concentration_holds_for_the_cube_root_model() {
    let grid = Arc::new(ParameterGrid::interval(0.0, 1.0, 11).unwrap());
    let model = analytic_model(&CriterionSpec::cube_root(), &grid).unwrap();
    let r = anti_concentration_check(&model, &[0, 1, 2], 0.05, 0.5, 20_000, 2).unwrap();
    assert!(r.holds, "{r:?}");
    assert!(anti_concentration_check(&model, &[], 0.05, 0.5, 100, 2).is_err());
    assert!(anti_concentration_check(&model, &(0..11).collect::<Vec<_>>(), 0.05, 0.5, 100, 2).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn softmax_is_sandwiched(values in prop::collection::vec(-50.0..50.0f64, 1..20), beta in 0.05..20.0f64) {
        let all: Vec<usize> = (0..values.len()).collect();
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let h = softmax(&values, beta, &all).unwrap();
        prop_assert!(h >= max - 1e-12);
        prop_assert!(h <= max + softmax_gap_bound(values.len(), beta) + 1e-12);
    }

    #[test]
    fn softmax_is_monotone(values in prop::collection::vec(-5.0..5.0f64, 2..10), bump in 0.0..3.0f64, k in 0usize..10) {
        let all: Vec<usize> = (0..values.len()).collect();
        let k = k % values.len();
        let mut raised = values.clone();
        raised[k] += bump;
        prop_assert!(softmax(&raised, 1.5, &all).unwrap() >= softmax(&values, 1.5, &all).unwrap() - 1e-12);
    }

    #[test]
    fn soft_step_is_sandwiched_by_indicators(z in -1.0..1.0f64, delta in 0.01..0.5f64) {
        let v = soft_step(z, delta);
        prop_assert!((0.0..=1.0).contains(&v));
        if z >= 0.0 { prop_assert_eq!(v, 1.0); }
        if z <= -delta { prop_assert_eq!(v, 0.0); }
    }

    #[test]
    fn infinite_dimensional_rate_is_continuous(alpha in 0.05..1.0f64, kappa in 0.05..0.45f64) {
        prop_assume!(alpha / 2.0 + kappa < 0.99);
        let spec = |a: f64, k: f64| RateSpec::new(RateRegime::InfiniteDim { alpha: a, kappa: k });
        let e0 = rate_bound(&spec(alpha, kappa), 1e4).unwrap().exponent;
        let e1 = rate_bound(&spec(alpha + 1e-7, kappa + 1e-7), 1e4).unwrap().exponent;
        prop_assert!((e0 - e1).abs() < 1e-4);
        prop_assert!(e0 <= 0.625 + 1e-15);
    }
}

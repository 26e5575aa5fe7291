//! Numerical checks of the smooth surrogates, anti-concentration, entropy integrals
//! and convergence rates used in the approximation argument.

use std::sync::OnceLock;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{invalid, precondition, Result};
use crate::exec::{stream_rng, Execution};
use crate::gaussian::GaussianModel;
use crate::quadrature::{integrate, integrate_with_breaks};

/// `beta^{-1} log sum_{m in subset} exp(beta x_m)`, evaluated with a max shift.
///
/// The result satisfies `0 <= h - max <= log|subset| / beta`.
pub fn softmax(values: &[f64], beta: f64, subset: &[usize]) -> Result<f64> {
    if subset.is_empty() {
        return Err(invalid("softmax over an empty subset"));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid(format!("beta must be positive, got {beta}")));
    }
    if let Some(&i) = subset.iter().find(|&&i| i >= values.len()) {
        return Err(invalid(format!("subset index {i} out of range")));
    }
    let max = subset.iter().map(|&i| values[i]).fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = subset.iter().map(|&i| (beta * (values[i] - max)).exp()).sum();
    let gap = sum.ln() / beta;
    debug_assert!(gap >= 0.0 && gap <= (subset.len() as f64).ln() / beta + 1e-12);
    Ok(max + gap)
}

/// Half-width of the mollifier, in units of the ramp variable.
const MOLLIFIER_WIDTH: f64 = 2.5e-4;

fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 / (t * t - 1.0)).exp()
    }
}

/// `1 / int_{-1}^{1} exp(1/(t^2 - 1)) dt`.
pub fn mollifier_constant() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| 1.0 / integrate(bump, -1.0, 1.0, 1e-15).value)
}

/// Smooth step with `1{z >= 0} <= g(z) <= 1{z >= -delta}`, nondecreasing in `z`.
///
/// It is the clipped linear ramp from `-delta` to `0`, narrowed by a factor
/// `1 - 2w` and smoothed with the normalised bump `C exp(1/(t^2 - 1))` of half-width
/// `w = 2.5e-4` (in ramp units). The slope never exceeds `1 / (delta (1 - 2w))`,
/// i.e. the ideal `1/delta` up to a factor `1.0005`. No C^1 function satisfying the
/// sandwich can have slope bounded by exactly `1/delta`.
pub fn soft_step(z: f64, delta: f64) -> f64 {
    assert!(delta > 0.0, "soft_step needs delta > 0");
    let w = MOLLIFIER_WIDTH;
    let u = (z + delta) / delta;
    if u >= 1.0 {
        return 1.0;
    }
    if u <= 0.0 {
        return 0.0;
    }
    let c = mollifier_constant();
    // Ramp is 0 for t <= t0, 1 for t >= t1, linear between.
    let t0 = ((w - u) / w).clamp(-1.0, 1.0);
    let t1 = ((1.0 - w - u) / w).clamp(-1.0, 1.0);
    let ramp = |t: f64| ((u + w * t - w) / (1.0 - 2.0 * w)).clamp(0.0, 1.0) * bump(t);
    let mut total = 0.0;
    if t1 > t0 {
        total += integrate(ramp, t0, t1, 1e-15).value;
    }
    if t1 < 1.0 {
        total += integrate(bump, t1, 1.0, 1e-15).value;
    }
    (c * total).clamp(0.0, 1.0)
}

/// `log(M) / beta`, the worst-case softmax gap over `M` coordinates.
pub fn softmax_gap_bound(m: usize, beta: f64) -> f64 {
    (m as f64).ln() / beta
}

/// `g_delta(h_A(x) - h_{A^c}(x) + log(M)/beta)`.
pub fn smooth_indicator(x: &[f64], beta: f64, delta: f64, subset: &[usize], complement: &[usize]) -> Result<f64> {
    let shift = softmax_gap_bound(x.len(), beta);
    Ok(soft_step(softmax(x, beta, subset)? - softmax(x, beta, complement)? + shift, delta))
}

fn complement_of(m: usize, subset: &[usize]) -> Result<Vec<usize>> {
    if subset.is_empty() || subset.iter().any(|&i| i >= m) {
        return Err(invalid("subset must be a nonempty set of coordinates"));
    }
    let rest: Vec<usize> = (0..m).filter(|i| !subset.contains(i)).collect();
    if rest.is_empty() {
        return Err(invalid("subset must be proper"));
    }
    Ok(rest)
}

/// Finite-difference partial derivatives of `smooth_indicator` at `x`:
/// `(sum |first|, sum |second|, sum |third|)` over coordinates.
///
/// First derivatives use central differences at step `1e-5` combined by one
/// Richardson step; the higher orders use plain central stencils and are
/// diagnostics only.
pub fn derivative_sums(x: &[f64], beta: f64, delta: f64, subset: &[usize]) -> Result<(f64, f64, f64)> {
    let complement = complement_of(x.len(), subset)?;
    let f = |y: &[f64]| smooth_indicator(y, beta, delta, subset, &complement);
    let mut point = x.to_vec();
    let mut along = |m: usize, step: f64| -> Result<f64> {
        let orig = point[m];
        point[m] = orig + step;
        let v = f(&point);
        point[m] = orig;
        v
    };
    let (h, h2, h3) = (1e-5, 1e-4, 1e-3);
    let centre = f(x)?;
    let (mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0);
    for m in 0..x.len() {
        let d = |a: f64, b: f64, step: f64| (a - b) / (2.0 * step);
        let coarse = d(along(m, h)?, along(m, -h)?, h);
        let fine = d(along(m, h / 2.0)?, along(m, -h / 2.0)?, h / 2.0);
        s1 += ((4.0 * fine - coarse) / 3.0).abs();
        s2 += ((along(m, h2)? - 2.0 * centre + along(m, -h2)?) / (h2 * h2)).abs();
        let third = (along(m, 2.0 * h3)? - 2.0 * along(m, h3)? + 2.0 * along(m, -h3)? - along(m, -2.0 * h3)?) / (2.0 * h3.powi(3));
        s3 += third.abs();
    }
    Ok((s1, s2, s3))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub cases: usize,
    pub failures: usize,
    /// Largest amount by which a bound was exceeded (zero when none was).
    pub max_violation: f64,
    pub pass: bool,
}

impl SweepReport {
    fn from_violations(violations: Vec<f64>, tolerance: f64) -> Self {
        let failures = violations.iter().filter(|&&v| v > tolerance).count();
        SweepReport {
            cases: violations.len(),
            failures,
            max_violation: violations.iter().copied().fold(0.0, f64::max),
            pass: failures == 0,
        }
    }
}

/// Checks `0 <= h_A(x) - max_A x <= log|A| / beta` to `1e-12` on random cases:
/// `M` uniform on `1..=20`, `beta` log-uniform on `[0.1, 10]`, `x_m ~ N(0, 25)` and a
/// random nonempty subset.
pub fn softmax_sandwich_sweep(cases: usize, seed: u64) -> Result<SweepReport> {
    let violations: Vec<Result<f64>> = Execution::default().map(cases, |c| {
        let mut rng = stream_rng(seed, c as u64);
        let m = rng.random_range(1..=20usize);
        let beta = 10f64.powf(rng.random_range(-1.0..=1.0));
        let x: Vec<f64> = (0..m).map(|_| 5.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        let mut subset: Vec<usize> = (0..m).filter(|_| rng.random::<bool>()).collect();
        if subset.is_empty() {
            subset.push(rng.random_range(0..m));
        }
        let max = subset.iter().map(|&i| x[i]).fold(f64::NEG_INFINITY, f64::max);
        let gap = softmax(&x, beta, &subset)? - max;
        Ok((-gap).max(gap - softmax_gap_bound(subset.len(), beta)).max(0.0))
    });
    Ok(SweepReport::from_violations(violations.into_iter().collect::<Result<_>>()?, 1e-12))
}

/// Checks `1{z >= 0} <= g(z) <= 1{z >= -delta}` exactly and monotonicity (to `1e-12`)
/// at random points: `delta` log-uniform on `[0.01, 10]`, `z` uniform on
/// `[-1.5 delta, 0.5 delta]`, compared with `g(z + delta/1000)`.
pub fn soft_step_sweep(points: usize, seed: u64) -> SweepReport {
    let violations = Execution::default().map(points, |c| {
        let mut rng = stream_rng(seed, c as u64);
        let delta = 10f64.powf(rng.random_range(-2.0..=1.0));
        let z = delta * rng.random_range(-1.5..=0.5);
        let g = soft_step(z, delta);
        let lower = if z >= 0.0 { 1.0 } else { 0.0 };
        let upper = if z >= -delta { 1.0 } else { 0.0 };
        let sandwich = if g < lower || g > upper { 1.0 } else { 0.0 };
        let monotone = (g - soft_step(z + delta * 1e-3, delta)).max(0.0);
        f64::max(sandwich, monotone)
    });
    SweepReport::from_violations(violations, 1e-12)
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivativeReport {
    pub m: usize,
    pub beta: f64,
    pub delta: f64,
    pub subset: Vec<usize>,
    pub trials: usize,
    /// `2 / delta`.
    pub bound: f64,
    pub tolerance: f64,
    pub max_first_order: f64,
    pub mean_first_order: f64,
    pub within_bound: bool,
    pub max_second_order: f64,
    pub max_third_order: f64,
}

/// Checks `sum_m |d_m f| <= (2/delta)(1 + 1e-3)` at `trials` random points.
///
/// Points are standard normal with the subset coordinates shifted so that the
/// argument of the soft step is uniform on `[-1.5 delta, 0.5 delta]`; this covers
/// both plateaus and the whole transition region.
pub fn derivative_bound_check(m: usize, beta: f64, delta: f64, subset: &[usize], trials: usize, seed: u64) -> Result<DerivativeReport> {
    if !(2..=12).contains(&m) {
        return Err(precondition(format!("derivative check supports 2 <= M <= 12, got {m}")));
    }
    if !(beta > 0.0 && delta > 0.0) {
        return Err(invalid("beta and delta must be positive"));
    }
    let complement = complement_of(m, subset)?;
    let results: Vec<Result<(f64, f64, f64)>> = Execution::default().map(trials, |t| {
        let mut rng = stream_rng(seed, t as u64);
        let mut x: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let target = delta * (rng.random::<f64>() * 2.0 - 1.5);
        let current = softmax(&x, beta, subset)? - softmax(&x, beta, &complement)? + softmax_gap_bound(m, beta);
        for &i in subset {
            x[i] += target - current;
        }
        derivative_sums(&x, beta, delta, subset)
    });
    let mut max1: f64 = 0.0;
    let mut sum1 = 0.0;
    let (mut max2, mut max3): (f64, f64) = (0.0, 0.0);
    for r in results {
        let (a, b, c) = r?;
        max1 = max1.max(a);
        sum1 += a;
        max2 = max2.max(b);
        max3 = max3.max(c);
    }
    let bound = 2.0 / delta;
    let tolerance = 1e-3;
    Ok(DerivativeReport {
        m,
        beta,
        delta,
        subset: subset.to_vec(),
        trials,
        bound,
        tolerance,
        max_first_order: max1,
        mean_first_order: if trials > 0 { sum1 / trials as f64 } else { 0.0 },
        within_bound: max1 <= bound * (1.0 + tolerance),
        max_second_order: max2,
        max_third_order: max3,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AntiConcentrationReport {
    pub subset: Vec<usize>,
    pub epsilon: f64,
    pub sigma_lower: f64,
    pub samples: usize,
    /// `2 eps / sigma (sqrt(2 log M) + 2)`.
    pub bound: f64,
    /// Largest empirical probability of a band `[r - eps, r + eps]`.
    pub max_band_prob: f64,
    pub se_at_max: f64,
    pub r_at_max: f64,
    pub holds: bool,
}

/// Monte Carlo estimate of `sup_r P(r - eps <= max_A W - max_{A^c} W <= r + eps)`
/// for `W` drawn from `model`, compared with the anti-concentration bound.
///
/// The supremum is taken over every band whose left end is a sampled difference,
/// which is the exact supremum of the empirical band probability. The check holds
/// when `estimate - 3 se <= bound`. For `eps = 0` the band probability of a
/// nondegenerate Gaussian difference is zero and is reported as such.
pub fn anti_concentration_check(
    model: &GaussianModel,
    subset: &[usize],
    epsilon: f64,
    sigma_lower: f64,
    mc_samples: usize,
    seed: u64,
) -> Result<AntiConcentrationReport> {
    let m = model.len();
    let complement = complement_of(m, subset)?;
    if !(epsilon >= 0.0 && sigma_lower > 0.0) {
        return Err(invalid("need epsilon >= 0 and sigma_lower > 0"));
    }
    if mc_samples == 0 {
        return Err(precondition("at least one Monte Carlo sample is required"));
    }
    let bound = 2.0 * epsilon / sigma_lower * ((2.0 * (m as f64).ln()).sqrt() + 2.0);
    if epsilon == 0.0 {
        return Ok(AntiConcentrationReport {
            subset: subset.to_vec(),
            epsilon,
            sigma_lower,
            samples: mc_samples,
            bound,
            max_band_prob: 0.0,
            se_at_max: 0.0,
            r_at_max: 0.0,
            holds: true,
        });
    }
    const CHUNK: usize = 4096;
    let chunks = mc_samples.div_ceil(CHUNK);
    let mut diffs: Vec<f64> = Execution::default()
        .map(chunks, |c| {
            let mut rng = stream_rng(seed, c as u64);
            let count = CHUNK.min(mc_samples - c * CHUNK);
            let mut xi = vec![0.0; m];
            let mut w = vec![0.0; m];
            (0..count)
                .map(|_| {
                    model.draw_into(&mut rng, &mut xi, &mut w);
                    let a = subset.iter().map(|&i| w[i]).fold(f64::NEG_INFINITY, f64::max);
                    let b = complement.iter().map(|&i| w[i]).fold(f64::NEG_INFINITY, f64::max);
                    a - b
                })
                .collect::<Vec<f64>>()
        })
        .into_iter()
        .flatten()
        .collect();
    diffs.sort_by(f64::total_cmp);
    let width = 2.0 * epsilon;
    let (mut best, mut best_start, mut hi) = (0usize, 0usize, 0usize);
    for lo in 0..diffs.len() {
        if hi < lo {
            hi = lo;
        }
        while hi < diffs.len() && diffs[hi] <= diffs[lo] + width {
            hi += 1;
        }
        if hi - lo > best {
            best = hi - lo;
            best_start = lo;
        }
    }
    let n = diffs.len() as f64;
    let p = best as f64 / n;
    let se = (p * (1.0 - p) / n).sqrt();
    Ok(AntiConcentrationReport {
        subset: subset.to_vec(),
        epsilon,
        sigma_lower,
        samples: mc_samples,
        bound,
        max_band_prob: p,
        se_at_max: se,
        r_at_max: diffs[best_start] + epsilon,
        holds: p - 3.0 * se <= bound,
    })
}

/// Metric entropy `H(delta)` models.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum EntropySpec {
    /// `dim * log(1 + diameter / delta)`, e.g. a ball in `R^dim`.
    EuclideanCompact { dim: f64, diameter: f64 },
    /// `scale * delta^{-alpha}` with `alpha < 2`.
    PowerLaw { alpha: f64, scale: f64 },
}

impl EntropySpec {
    pub fn entropy(&self, delta: f64) -> f64 {
        match *self {
            EntropySpec::EuclideanCompact { dim, diameter } => dim * (diameter / delta).ln_1p(),
            EntropySpec::PowerLaw { alpha, scale } => scale * delta.powf(-alpha),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            EntropySpec::EuclideanCompact { dim, diameter } if dim >= 0.0 && diameter > 0.0 => Ok(()),
            EntropySpec::PowerLaw { alpha, scale } if alpha > 0.0 && alpha < 2.0 && scale >= 0.0 => Ok(()),
            EntropySpec::PowerLaw { alpha, .. } if alpha >= 2.0 => {
                Err(precondition(format!("entropy exponent must be below 2, got {alpha}")))
            }
            other => Err(invalid(format!("invalid entropy specification {other:?}"))),
        }
    }
}

/// `J(eps) = int_0^eps sqrt(1 + H(delta)) d delta`.
///
/// The substitution `delta = eps s^k` (with `k = 4/(2 - alpha)` for power laws and
/// `k = 2` for the logarithmic case) removes the singularity at zero before adaptive
/// Gauss-Kronrod integration.
pub fn entropy_integral(spec: &EntropySpec, epsilon: f64) -> Result<f64> {
    spec.validate()?;
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(invalid(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    let k = match *spec {
        EntropySpec::PowerLaw { alpha, .. } => 4.0 / (2.0 - alpha),
        EntropySpec::EuclideanCompact { .. } => 2.0,
    };
    let integrand = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        let delta = epsilon * s.powf(k);
        (1.0 + spec.entropy(delta)).sqrt() * epsilon * k * s.powf(k - 1.0)
    };
    Ok(integrate_with_breaks(integrand, &[0.0, 0.5, 1.0], 1e-13).value)
}

/// Regimes of the rate calculator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum RateRegime {
    FiniteDim,
    InfiniteDim { alpha: f64, kappa: f64 },
    BootstrapFinite,
    BootstrapInfinite { alpha: f64, kappa: f64 },
}

/// Rate specification. `q` and `c_l` (the Hoelder exponent and constant of the mean
/// criterion) are recorded for completeness; they only enter unspecified constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateSpec {
    pub regime: RateRegime,
    pub q: Option<f64>,
    pub c_l: Option<f64>,
}

impl RateSpec {
    pub fn new(regime: RateRegime) -> Self {
        RateSpec { regime, q: None, c_l: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateTerm {
    pub name: &'static str,
    pub exponent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateBound {
    /// Binding (smallest) exponent `e`.
    pub exponent: f64,
    /// `n^{-e}`, times `log n` in the finite-dimensional regimes.
    pub value: f64,
    pub binding: &'static str,
    pub terms: Vec<RateTerm>,
    pub log_factor: bool,
}

/// Rate of the approximation error in `n` (up to unspecified constants).
pub fn rate_bound(spec: &RateSpec, n: f64) -> Result<RateBound> {
    if !(n >= 2.0 && n.is_finite()) {
        return Err(precondition(format!("n must be at least 2, got {n}")));
    }
    match spec.regime {
        RateRegime::FiniteDim | RateRegime::BootstrapFinite => {
            let e = 5.0 / 8.0;
            Ok(RateBound {
                exponent: e,
                value: n.powf(-e) * n.ln(),
                binding: "five_eighths",
                terms: vec![RateTerm { name: "five_eighths", exponent: e }],
                log_factor: true,
            })
        }
        RateRegime::InfiniteDim { alpha, kappa } | RateRegime::BootstrapInfinite { alpha, kappa } => {
            if !(alpha > 0.0 && alpha < 2.0 && kappa > 0.0 && kappa < 1.0) {
                return Err(precondition(format!("need alpha in (0,2) and kappa in (0,1), got alpha={alpha}, kappa={kappa}")));
            }
            if alpha / 2.0 + kappa >= 1.0 {
                return Err(precondition(format!("need alpha/2 + kappa < 1, got {}", alpha / 2.0 + kappa)));
            }
            let terms = vec![
                RateTerm { name: "five_eighths", exponent: 5.0 / 8.0 },
                RateTerm { name: "entropy", exponent: (1.0 - alpha / 2.0 - kappa) / alpha },
                RateTerm { name: "coupling", exponent: (5.0 - 5.0 * kappa - alpha) / (8.0 - 8.0 * kappa) },
            ];
            let binding = terms.iter().fold(&terms[0], |b, t| if t.exponent < b.exponent { t } else { b });
            Ok(RateBound {
                exponent: binding.exponent,
                value: n.powf(-binding.exponent),
                binding: binding.name,
                terms: terms.clone(),
                log_factor: false,
            })
        }
    }
}

/// `eps + (J(eps) + eps sqrt(log(1/eps))) / sqrt(n) + (sqrt(log(1/eps)) + log(1/eps)) / n`,
/// the shape of the main approximation error without its constant. Diagnostic only.
pub fn approximation_error_shape(n: f64, epsilon: f64, entropy_integral_value: f64) -> f64 {
    let l = (1.0 / epsilon).ln();
    epsilon + (entropy_integral_value + epsilon * l.sqrt()) / n.sqrt() + (l.sqrt() + l) / n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_examples() {
        let h = softmax(&[0.0, 0.0], 1.0, &[0, 1]).unwrap();
        assert!((h - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softmax(&[3.0, -1.0], 2.0, &[1]).unwrap(), -1.0);
        let h = softmax(&[0.0, 100.0], 1.0, &[0, 1]).unwrap();
        assert!(h - 100.0 < 1e-40);
        assert!(softmax(&[1.0], 1.0, &[]).is_err());
    }

    #[test]
    fn soft_step_plateaus_and_midpoint() {
        for d in [0.1, 1.0, 10.0] {
            assert_eq!(soft_step(0.0, d), 1.0);
            assert_eq!(soft_step(-2.0 * d, d), 0.0);
            assert!((soft_step(-0.5 * d, d) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn rate_examples() {
        let r = rate_bound(&RateSpec::new(RateRegime::FiniteDim), 1e4).unwrap();
        assert!((r.value - 1e4f64.powf(-0.625) * 1e4f64.ln()).abs() < 1e-15);
        let r = rate_bound(&RateSpec::new(RateRegime::InfiniteDim { alpha: 0.5, kappa: 0.25 }), 1e4).unwrap();
        assert!((r.exponent - 13.0 / 24.0).abs() < 1e-12);
        assert_eq!(r.binding, "coupling");
        assert!(rate_bound(&RateSpec::new(RateRegime::InfiniteDim { alpha: 1.5, kappa: 0.5 }), 1e4).is_err());
    }

    #[test]
    fn zero_entropy_integral_is_epsilon() {
        let j = entropy_integral(&EntropySpec::EuclideanCompact { dim: 0.0, diameter: 1.0 }, 0.3).unwrap();
        assert!((j - 0.3).abs() < 1e-14);
        assert!(entropy_integral(&EntropySpec::PowerLaw { alpha: 2.0, scale: 1.0 }, 0.3).is_err());
    }
}

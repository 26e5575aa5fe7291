//! Population moments of `f_theta(Z)` over a grid.
//!
//! Two independent sources live here:
//!
//! * [`population_moments`]: exact or quadrature-based moments under a concrete
//!   [`DataLaw`] (the oracle every experiment relies on);
//! * [`paper_moments`]: the printed closed forms from the source analysis, kept
//!   for comparison only. Some of them are not valid covariances (see
//!   [`paper_discrepancy`]).
//!
//! All moments are of the criterion with its natural sign; callers flip the mean
//! with [`CriterionSpec::orientation`] when they need the maximisation objective.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::criterion::{lad_prediction, CriterionKind, CriterionSpec, Kernel};
use crate::error::{Error, Result};
use crate::grid::ParameterGrid;
use crate::quadrature::{gauss_legendre, integrate_with_breaks};
use crate::sample::{DataLaw, ResponseLaw};

const TOL: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Exact moments under `law`, by closed-form overlap lengths, exact enumeration or
/// adaptive quadrature (absolute tolerance about 1e-13).
pub fn population_moments(spec: &CriterionSpec, grid: &ParameterGrid, law: &DataLaw) -> Result<Moments> {
    spec.check_grid(grid)?;
    law.validate()?;
    let m = grid.len();
    match (spec.kind(), *law) {
        (CriterionKind::CubeRoot, DataLaw::Uniform { lo, hi }) => {
            let overlap = |a: f64, b: f64| ((b.min(hi) - a.max(lo)).max(0.0)) / (hi - lo);
            let theta = |j: usize| grid.point(j)[0];
            let mean = DVector::from_fn(m, |j, _| overlap(theta(j) - 1.0, theta(j) + 1.0));
            let cov = DMatrix::from_fn(m, m, |i, j| {
                let (a, b) = (theta(i).max(theta(j)), theta(i).min(theta(j)));
                overlap(a - 1.0, b + 1.0) - mean[i] * mean[j]
            });
            Ok(Moments { mean, cov })
        }
        (CriterionKind::LadRegression { sieve, .. }, DataLaw::LadPair { theta0, intercept, x_lo, x_hi, noise_half_width }) => {
            let w = noise_half_width;
            let offsets = |x: f64| -> Result<Vec<f64>> {
                grid.points().iter().map(|p| Ok(theta0 * x + intercept - lad_prediction(*sieve, p, x)?)).collect()
            };
            offsets(x_lo)?;
            let mut mean = DVector::zeros(m);
            let mut second = DMatrix::zeros(m, m);
            let average = |g: &dyn Fn(f64) -> f64| -> f64 {
                if x_lo == x_hi {
                    g(x_lo)
                } else {
                    let kinks = lad_kinks(theta0, intercept, sieve.is_none(), grid, x_lo, x_hi, w);
                    integrate_with_breaks(g, &kinks, TOL).value / (x_hi - x_lo)
                }
            };
            for i in 0..m {
                mean[i] = average(&|x| {
                    let a = offsets(x).expect("checked")[i];
                    uniform_abs_moment(a, w)
                });
                for j in i..m {
                    let v = average(&|x| {
                        let o = offsets(x).expect("checked");
                        uniform_abs_product(o[i], o[j], w)
                    });
                    second[(i, j)] = v;
                    second[(j, i)] = v;
                }
            }
            let cov = DMatrix::from_fn(m, m, |i, j| second[(i, j)] - mean[i] * mean[j]);
            Ok(Moments { mean, cov })
        }
        (CriterionKind::MinVolume { half_width, bandwidth, kernel, x0 }, DataLaw::MinVolumePair { x_lo, x_hi, response }) => {
            let (c1, c2) = kernel_moments(*kernel, *x0, *bandwidth, x_lo, x_hi);
            Ok(min_volume_moments(grid, *half_width, response, c1, c2))
        }
        (CriterionKind::Tabulated(table), DataLaw::TableColumns { columns }) => {
            if columns != table.columns() {
                return Err(Error::LengthMismatch { expected: table.columns(), actual: columns });
            }
            let k = columns as f64;
            let mean = DVector::from_fn(m, |j, _| table.row(j).iter().sum::<f64>() / k);
            let cov = DMatrix::from_fn(m, m, |i, j| {
                let (ri, rj) = (table.row(i), table.row(j));
                ri.iter().zip(rj).map(|(a, b)| (a - mean[i]) * (b - mean[j])).sum::<f64>() / k
            });
            Ok(Moments { mean, cov })
        }
        (_, law) => Err(Error::NoClosedForm(format!("{} criterion under the {} law", spec.name(), law.name()))),
    }
}

/// Population argmax of `orientation * E f_theta`, lowest index on ties.
pub fn population_argmax(spec: &CriterionSpec, grid: &ParameterGrid, law: &DataLaw) -> Result<usize> {
    let moments = population_moments(spec, grid, law)?;
    let sign = spec.orientation();
    let values: Vec<f64> = moments.mean.iter().map(|v| sign * v).collect();
    crate::argmax::argmax_index(&values)
}

/// `E |a + e|` for `e ~ U[-w, w]`.
pub fn uniform_abs_moment(a: f64, w: f64) -> f64 {
    if a.abs() >= w {
        a.abs()
    } else {
        (a * a + w * w) / (2.0 * w)
    }
}

/// `E |a + e| |b + e|` for `e ~ U[-w, w]`, exact piecewise Gauss-Legendre.
pub fn uniform_abs_product(a: f64, b: f64, w: f64) -> f64 {
    let (nodes, weights) = gl3();
    let mut cuts = [-w, (-a).clamp(-w, w), (-b).clamp(-w, w), w];
    cuts.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for c in cuts.windows(2) {
        let (lo, hi) = (c[0], c[1]);
        if hi <= lo {
            continue;
        }
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for (t, wt) in nodes.iter().zip(weights.iter()) {
            let e = mid + half * t;
            total += wt * half * (a + e).abs() * (b + e).abs();
        }
    }
    total / (2.0 * w)
}

fn gl3() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: std::sync::OnceLock<(Vec<f64>, Vec<f64>)> = std::sync::OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(3))
}

/// Covariate values where some residual offset crosses `+-w` (linear predictors only).
fn lad_kinks(theta0: f64, intercept: f64, linear: bool, grid: &ParameterGrid, lo: f64, hi: f64, w: f64) -> Vec<f64> {
    let mut cuts = vec![lo, hi];
    if linear {
        for p in grid.points() {
            let slope = theta0 - p[0];
            let shift = intercept - p.get(1).copied().unwrap_or(0.0);
            if slope != 0.0 {
                for target in [-w, 0.0, w] {
                    let x = (target - shift) / slope;
                    if x > lo && x < hi {
                        cuts.push(x);
                    }
                }
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts
}

/// `(E K((X - x0)/h), E K((X - x0)/h)^2)` for `X ~ U[lo, hi]` (a point mass when equal).
pub fn kernel_moments(kernel: Kernel, x0: f64, h: f64, lo: f64, hi: f64) -> (f64, f64) {
    if lo == hi {
        let k = kernel.weight((lo - x0) / h);
        return (k, k * k);
    }
    let mut cuts = vec![lo, hi];
    for u in kernel.kinks() {
        let x = x0 + h * u;
        if x > lo && x < hi {
            cuts.push(x);
        }
    }
    cuts.sort_by(f64::total_cmp);
    let len = hi - lo;
    let c1 = integrate_with_breaks(|x| kernel.weight((x - x0) / h), &cuts, TOL).value / len;
    let c2 = integrate_with_breaks(|x| kernel.weight((x - x0) / h).powi(2), &cuts, TOL).value / len;
    (c1, c2)
}

fn min_volume_moments(grid: &ParameterGrid, iota: f64, response: ResponseLaw, c1: f64, c2: f64) -> Moments {
    let m = grid.len();
    let theta = |j: usize| grid.point(j)[0];
    let mean = DVector::from_fn(m, |j, _| c1 * response.interval_prob(theta(j) - iota, theta(j) + iota));
    let cov = DMatrix::from_fn(m, m, |i, j| {
        let (a, b) = (theta(i).max(theta(j)), theta(i).min(theta(j)));
        c2 * response.interval_prob(a - iota, b + iota) - mean[i] * mean[j]
    });
    Moments { mean, cov }
}

/// The law the printed closed forms are stated for.
pub fn paper_law(spec: &CriterionSpec) -> Option<DataLaw> {
    match spec.kind() {
        CriterionKind::CubeRoot => Some(DataLaw::Uniform { lo: 0.0, hi: 1.0 }),
        // Y ~ U[0, 1/2] and X = 1.
        CriterionKind::LadRegression { sieve: None, .. } => {
            Some(DataLaw::LadPair { theta0: 0.0, intercept: 0.25, x_lo: 1.0, x_hi: 1.0, noise_half_width: 0.25 })
        }
        // Y | X ~ U[0, 1]; the covariate law is not stated, uniform on [0, 1] is used.
        CriterionKind::MinVolume { .. } => {
            Some(DataLaw::MinVolumePair { x_lo: 0.0, x_hi: 1.0, response: ResponseLaw::Uniform { lo: 0.0, hi: 1.0 } })
        }
        _ => None,
    }
}

/// The printed closed forms, evaluated on the grid without any validity checks.
///
/// * cube-root: mean `1/2`, covariance `7/4 - |theta - theta'|`;
/// * LAD: mean `theta^2 - 3 theta + 9/2`, covariance
///   `C0(t) - C1(t) d + C2(t) d^2 + d^3/3` with `t = min(theta, theta')`, `d = |theta - theta'|`;
/// * minimum-volume: mean `2 C_K iota`, covariance `C~_K |theta - theta'| - 2 C_K iota^2`
///   with kernel moments under the [`paper_law`] covariate law.
pub fn paper_moments(spec: &CriterionSpec, grid: &ParameterGrid) -> Result<Moments> {
    spec.check_grid(grid)?;
    let m = grid.len();
    let theta = |j: usize| grid.point(j)[0];
    match spec.kind() {
        CriterionKind::CubeRoot => Ok(Moments {
            mean: DVector::from_element(m, 0.5),
            cov: DMatrix::from_fn(m, m, |i, j| 1.75 - (theta(i) - theta(j)).abs()),
        }),
        CriterionKind::LadRegression { sieve: None, .. } if grid.dim() == 1 => {
            let mean = DVector::from_fn(m, |j, _| {
                let t = theta(j);
                t * t - 3.0 * t + 4.5
            });
            let cov = DMatrix::from_fn(m, m, |i, j| {
                let t = theta(i).min(theta(j));
                let d = (theta(i) - theta(j)).abs();
                let c0 = 576.0 / 64.0 - 71.0 * t / 8.0 + 5.0 * t * t / 2.0 + t.powi(3) - t.powi(4);
                let c1 = 71.0 / 16.0 - 5.0 * t / 2.0 - 3.0 * t * t / 2.0 + 2.0 * t.powi(3);
                let c2 = -1.0 / 8.0 + t / 2.0 - t * t / 2.0;
                c0 - c1 * d + c2 * d * d + d.powi(3) / 3.0
            });
            Ok(Moments { mean, cov })
        }
        CriterionKind::MinVolume { half_width, bandwidth, kernel, x0 } => {
            let (c1, c2) = kernel_moments(*kernel, *x0, *bandwidth, 0.0, 1.0);
            Ok(Moments {
                mean: DVector::from_element(m, 2.0 * c1 * half_width),
                cov: DMatrix::from_fn(m, m, |i, j| {
                    c2 * (theta(i) - theta(j)).abs() - 2.0 * c1 * half_width * half_width
                }),
            })
        }
        _ => Err(Error::NoClosedForm(format!("{} criterion on a {}-dimensional grid", spec.name(), grid.dim()))),
    }
}

/// Entry-level comparison of the printed closed forms against the oracle.
#[derive(Clone, Debug, Serialize)]
pub struct DiscrepancyReport {
    pub criterion: String,
    pub law: String,
    pub grid_points: usize,
    pub max_abs_mean_diff: f64,
    pub max_abs_cov_diff: f64,
    /// Largest `|paper - oracle| / max(|oracle|, 1e-12)` over covariance entries.
    pub max_rel_cov_diff: f64,
    pub paper_min_eigenvalue: f64,
    pub oracle_min_eigenvalue: f64,
    /// Whether the printed covariance has a negative diagonal entry or eigenvalue.
    pub paper_cov_invalid: bool,
    pub paper_mean: Vec<f64>,
    pub oracle_mean: Vec<f64>,
    pub paper_cov_diagonal: Vec<f64>,
    pub oracle_cov_diagonal: Vec<f64>,
}

/// Compares [`paper_moments`] with [`population_moments`] under [`paper_law`].
pub fn paper_discrepancy(spec: &CriterionSpec, grid: &ParameterGrid) -> Result<DiscrepancyReport> {
    let law = paper_law(spec).ok_or_else(|| Error::NoClosedForm(spec.name().to_string()))?;
    let paper = paper_moments(spec, grid)?;
    let oracle = population_moments(spec, grid, &law)?;
    let min_eig = |c: &DMatrix<f64>| SymmetricEigen::new(c.clone()).eigenvalues.min();
    let mut max_rel = 0.0_f64;
    for (p, o) in paper.cov.iter().zip(oracle.cov.iter()) {
        max_rel = max_rel.max((p - o).abs() / o.abs().max(1e-12));
    }
    let paper_min = min_eig(&paper.cov);
    Ok(DiscrepancyReport {
        criterion: spec.name().to_string(),
        law: format!("{law:?}"),
        grid_points: grid.len(),
        max_abs_mean_diff: (&paper.mean - &oracle.mean).amax(),
        max_abs_cov_diff: (&paper.cov - &oracle.cov).amax(),
        max_rel_cov_diff: max_rel,
        paper_min_eigenvalue: paper_min,
        oracle_min_eigenvalue: min_eig(&oracle.cov),
        paper_cov_invalid: paper_min < 0.0 || paper.cov.diagonal().iter().any(|&d| d < 0.0),
        paper_mean: paper.mean.iter().copied().collect(),
        oracle_mean: oracle.mean.iter().copied().collect(),
        paper_cov_diagonal: paper.cov.diagonal().iter().copied().collect(),
        oracle_cov_diagonal: oracle.cov.diagonal().iter().copied().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abs_moment_matches_direct_formula() {
        // e ~ U[-1, 1], a = 0.5: (0.25 + 1)/2.
        assert!((uniform_abs_moment(0.5, 1.0) - 0.625).abs() < 1e-15);
        assert!((uniform_abs_product(0.5, 0.5, 1.0) - (0.25 + 1.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn cube_root_under_unit_uniform_is_constant() {
        let grid = ParameterGrid::interval(0.0, 1.0, 11).unwrap();
        let m = population_moments(&CriterionSpec::cube_root(), &grid, &DataLaw::Uniform { lo: 0.0, hi: 1.0 }).unwrap();
        assert!(m.mean.iter().all(|&v| v == 1.0));
        assert!(m.cov.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn paper_lad_mean_is_off_at_zero() {
        let grid = ParameterGrid::interval(0.0, 0.5, 3).unwrap();
        let spec = CriterionSpec::lad(1.0, 1.0).unwrap();
        let r = paper_discrepancy(&spec, &grid).unwrap();
        assert_eq!(r.paper_mean[0], 4.5);
        assert!((r.oracle_mean[0] - 0.25).abs() < 1e-12);
    }
}

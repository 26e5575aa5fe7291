//! Coherent positive definiteness and the linear Toeplitz covariance family.
//!
//! A covariance `S` is coherently positive definite at level `s2` when, for every
//! proper nonempty index set `A`, the diagonal of the Schur complement
//! `S_A - S_{A,A^c} S_{A^c}^{-1} S_{A^c,A}` is at least `s2`. Each diagonal entry is
//! the conditional variance of one coordinate in `A` given all coordinates outside `A`.

pub mod exact;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, precondition, Error, Result};
use crate::exec::{stream_rng, Execution};
use crate::linalg::{asymmetry, cholesky_with_jitter, forward_solve, PivotRule};

/// Largest size for exhaustive subset enumeration.
pub const EXHAUSTIVE_LIMIT: usize = 18;

/// Default relative slack in the pass comparison (see [`coherent_pd_check_with`]).
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoherenceMode {
    /// All `2^M - 2` proper nonempty subsets.
    Exhaustive,
    /// `subsets` random subsets plus every singleton and every singleton complement.
    Sampled { subsets: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoherenceReport {
    pub matrix_size: usize,
    pub subsets_checked: u64,
    pub exhaustive: bool,
    pub min_schur_diag: f64,
    pub sigma_lower_sq: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Subset attaining the minimum, reported when the check fails.
    pub witness: Option<Vec<usize>>,
    /// Subset attaining the minimum (lowest enumeration position on ties).
    pub min_subset: Vec<usize>,
    /// Row (inside `min_subset`) whose conditional variance is smallest.
    pub min_row: usize,
    /// Largest jitter any complement block needed.
    pub max_jitter: f64,
}

/// Conditional variances of the rows in `subset` given the rows outside it, in the
/// order of `subset`. Also returns the jitter the complement block needed.
pub fn schur_diagonal(sigma: &DMatrix<f64>, subset: &[usize]) -> Result<(Vec<f64>, f64)> {
    let m = sigma.nrows();
    let mut inside = vec![false; m];
    for &i in subset {
        if i >= m || std::mem::replace(&mut inside[i], true) {
            return Err(invalid(format!("subset {subset:?} is not a set of row indices")));
        }
    }
    let rest: Vec<usize> = (0..m).filter(|&i| !inside[i]).collect();
    if rest.is_empty() {
        return Ok((subset.iter().map(|&i| sigma[(i, i)]).collect(), 0.0));
    }
    let block = sigma.select_rows(&rest).select_columns(&rest);
    let factor = cholesky_with_jitter(&block, PivotRule::Definite).map_err(|_| Error::SingularSubset { subset: subset.to_vec() })?;
    let diag = subset
        .iter()
        .map(|&i| {
            let cross = DVector::from_iterator(rest.len(), rest.iter().map(|&k| sigma[(k, i)]));
            let y = forward_solve(&factor.lower, &cross);
            sigma[(i, i)] - y.norm_squared()
        })
        .collect();
    Ok((diag, factor.jitter))
}

#[derive(Clone, Copy)]
struct Best {
    value: f64,
    key: u64,
    row: usize,
    jitter: f64,
}

impl Best {
    const NONE: Best = Best { value: f64::INFINITY, key: u64::MAX, row: 0, jitter: 0.0 };

    fn merge(self, other: Best) -> Best {
        let jitter = self.jitter.max(other.jitter);
        let better = other.value < self.value || (other.value == self.value && other.key < self.key);
        if better {
            Best { jitter, ..other }
        } else {
            Best { jitter, ..self }
        }
    }
}

fn mask_subset(mask: u64, m: usize) -> Vec<usize> {
    (0..m).filter(|&i| mask >> i & 1 == 1).collect()
}

fn evaluate_subset(sigma: &DMatrix<f64>, subset: &[usize], key: u64) -> Result<Best> {
    let (diag, jitter) = schur_diagonal(sigma, subset)?;
    let (pos, value) = diag
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bp, bv), (p, &v)| if v < bv { (p, v) } else { (bp, bv) });
    Ok(Best { value, key, row: subset[pos], jitter })
}

pub fn coherent_pd_check(sigma: &DMatrix<f64>, sigma_lower_sq: f64, mode: CoherenceMode) -> Result<CoherenceReport> {
    coherent_pd_check_with(sigma, sigma_lower_sq, mode, DEFAULT_TOLERANCE, Execution::default())
}

/// Full-control variant. The check passes when
/// `min_schur_diag >= sigma_lower_sq - tolerance * |sigma_lower_sq|`; the slack exists
/// because families such as the linear Toeplitz matrices attain the threshold exactly
/// and floating-point Schur complements land a few ulps either side of it.
pub fn coherent_pd_check_with(
    sigma: &DMatrix<f64>,
    sigma_lower_sq: f64,
    mode: CoherenceMode,
    tolerance: f64,
    exec: Execution,
) -> Result<CoherenceReport> {
    let m = sigma.nrows();
    if m == 0 || sigma.ncols() != m {
        return Err(invalid("coherence check needs a nonempty square matrix"));
    }
    if asymmetry(sigma) > 1e-10 || sigma.iter().any(|v| !v.is_finite()) {
        return Err(invalid("coherence check needs a finite symmetric matrix"));
    }
    if !(tolerance >= 0.0) {
        return Err(invalid("tolerance must be nonnegative"));
    }
    let (best, checked, exhaustive) = match mode {
        CoherenceMode::Exhaustive => {
            if m > EXHAUSTIVE_LIMIT {
                return Err(precondition(format!("exhaustive mode supports M <= {EXHAUSTIVE_LIMIT}, got {m}")));
            }
            let total = (1u64 << m) - 2;
            const CHUNK: u64 = 512;
            let chunks = total.div_ceil(CHUNK) as usize;
            let partial: Vec<Result<Best>> = exec.map(chunks, |c| {
                let start = 1 + c as u64 * CHUNK;
                let end = (start + CHUNK).min(total + 1);
                let mut best = Best::NONE;
                for mask in start..end {
                    best = best.merge(evaluate_subset(sigma, &mask_subset(mask, m), mask)?);
                }
                Ok(best)
            });
            let mut best = Best::NONE;
            for p in partial {
                best = best.merge(p?);
            }
            (best, total, true)
        }
        CoherenceMode::Sampled { subsets, seed } => {
            let mut list: Vec<Vec<usize>> = Vec::new();
            if m > 1 {
                list.extend((0..m).map(|i| vec![i]));
                list.extend((0..m).map(|i| (0..m).filter(|&k| k != i).collect()));
                let mut rng = stream_rng(seed, 0);
                while list.len() < 2 * m + subsets {
                    let s: Vec<usize> = (0..m).filter(|_| rng.random::<bool>()).collect();
                    if !s.is_empty() && s.len() < m {
                        list.push(s);
                    }
                }
            }
            let partial: Vec<Result<Best>> = exec.map(list.len(), |k| evaluate_subset(sigma, &list[k], k as u64));
            let mut best = Best::NONE;
            for p in partial {
                best = best.merge(p?);
            }
            let witness_key = best.key;
            let checked = list.len() as u64;
            if checked > 0 {
                let subset = &list[witness_key as usize];
                return Ok(finish(sigma, sigma_lower_sq, tolerance, best, subset.clone(), checked, false));
            }
            (best, 0, false)
        }
    };
    if checked == 0 {
        // A single coordinate has no proper subsets; its own variance is reported.
        let best = Best { value: sigma[(0, 0)], key: 0, row: 0, jitter: 0.0 };
        return Ok(finish(sigma, sigma_lower_sq, tolerance, best, vec![0], 0, exhaustive));
    }
    let subset = mask_subset(best.key, m);
    Ok(finish(sigma, sigma_lower_sq, tolerance, best, subset, checked, exhaustive))
}

fn finish(sigma: &DMatrix<f64>, s2: f64, tolerance: f64, best: Best, subset: Vec<usize>, checked: u64, exhaustive: bool) -> CoherenceReport {
    let pass = best.value >= s2 - tolerance * s2.abs();
    CoherenceReport {
        matrix_size: sigma.nrows(),
        subsets_checked: checked,
        exhaustive,
        min_schur_diag: best.value,
        sigma_lower_sq: s2,
        tolerance,
        pass,
        witness: if pass { None } else { Some(subset.clone()) },
        min_subset: subset,
        min_row: best.row,
        max_jitter: best.jitter,
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(sigma: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(sigma.clone()).eigenvalues.min()
}

/// Sufficient condition: `lambda_min >= sigma_lower_sq` (with slack 1e-10 relative).
pub fn eigen_sufficiency(sigma: &DMatrix<f64>, sigma_lower_sq: f64) -> bool {
    min_eigenvalue(sigma) >= sigma_lower_sq - 1e-10 * sigma_lower_sq.abs().max(1.0)
}

/// Matrix with entries `c - delta |i - j|`, `size = p + 1`. Requires `c > p delta / 2`.
pub fn linear_toeplitz(c: f64, delta: f64, size: usize) -> Result<DMatrix<f64>> {
    if size == 0 {
        return Err(invalid("size must be positive"));
    }
    let p = (size - 1) as f64;
    if !(delta >= 0.0 && c > p * delta / 2.0 && c.is_finite()) {
        return Err(precondition(format!("need delta >= 0 and c > p delta / 2, got c={c}, delta={delta}, p={p}")));
    }
    Ok(DMatrix::from_fn(size, size, |i, j| c - delta * (i as f64 - j as f64).abs()))
}

/// Closed-form signed cofactors and determinant of the `p x p` linear Toeplitz matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CofactorForms {
    pub cofactors: DMatrix<f64>,
    pub determinant: f64,
}

/// Closed-form cofactors: a tridiagonal band plus the two far corners, zero elsewhere.
pub fn toeplitz_cofactors(c: f64, delta: f64, p: usize) -> Result<CofactorForms> {
    if p < 3 {
        return Err(precondition(format!("closed forms hold for p >= 3, got {p}")));
    }
    let pf = p as f64;
    let pow2 = |k: usize| 2f64.powi(k as i32);
    let dp2 = delta.powi(p as i32 - 2);
    let dp1 = delta.powi(p as i32 - 1);
    let end_diag = pow2(p - 2) * c * dp2 - (pf - 2.0) * pow2(p - 3) * dp1;
    let mid_diag = pow2(p - 1) * c * dp2 - (pf - 1.0) * pow2(p - 2) * dp1;
    let band = -pow2(p - 2) * c * dp2 + (pf - 1.0) * pow2(p - 3) * dp1;
    let corner = pow2(p - 3) * dp1;
    let cofactors = DMatrix::from_fn(p, p, |i, j| {
        let last = p - 1;
        if i == j {
            if i == 0 || i == last {
                end_diag
            } else {
                mid_diag
            }
        } else if i.abs_diff(j) == 1 {
            band
        } else if (i, j) == (0, last) || (i, j) == (last, 0) {
            corner
        } else {
            0.0
        }
    });
    let determinant = pow2(p - 1) * c * dp1 - (pf - 1.0) * pow2(p - 2) * dp1 * delta;
    Ok(CofactorForms { cofactors, determinant })
}

/// `2 delta (2c - p delta) / (2c - (p-1) delta)`: variance of the first coordinate of
/// the `(p+1)`-size matrix given the other `p`.
pub fn toeplitz_conditional_variance(c: f64, delta: f64, p: usize) -> Result<f64> {
    let pf = p as f64;
    let denom = 2.0 * c - (pf - 1.0) * delta;
    if !(denom > 0.0) {
        return Err(precondition(format!("2c - (p-1) delta must be positive, got {denom}")));
    }
    Ok(2.0 * delta * (2.0 * c - pf * delta) / denom)
}

/// Conditional variance of `row` given all other rows, as the last Cholesky pivot
/// after moving `row` to the end.
pub fn conditional_variance(sigma: &DMatrix<f64>, row: usize) -> Result<f64> {
    let (d, _) = schur_diagonal(sigma, &[row])?;
    Ok(d[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_passes_at_one() {
        let r = coherent_pd_check(&DMatrix::identity(5, 5), 1.0, CoherenceMode::Exhaustive).unwrap();
        assert!(r.pass);
        assert_eq!(r.min_schur_diag, 1.0);
        assert_eq!(r.subsets_checked, 30);
        assert!(r.witness.is_none());
    }

    #[test]
    fn rank_one_fails_with_witness() {
        let v = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let s = &v * v.transpose();
        let r = coherent_pd_check(&s, 0.01, CoherenceMode::Exhaustive).unwrap();
        assert!(!r.pass);
        assert!(r.witness.is_some());
        assert!(r.min_schur_diag.abs() < 1e-6);
    }

    #[test]
    fn toeplitz_examples() {
        let t = linear_toeplitz(1.75, 0.25, 3).unwrap();
        assert_eq!(t, DMatrix::from_row_slice(3, 3, &[1.75, 1.5, 1.25, 1.5, 1.75, 1.5, 1.25, 1.5, 1.75]));
        assert_eq!(linear_toeplitz(2.0, 0.0, 3).unwrap(), DMatrix::from_element(3, 3, 2.0));
        assert_eq!(linear_toeplitz(1.5, 0.3, 1).unwrap(), DMatrix::from_element(1, 1, 1.5));
        assert!(linear_toeplitz(0.1, 1.0, 4).is_err());
    }

    #[test]
    fn cofactor_examples() {
        let f = toeplitz_cofactors(1.75, 0.25, 3).unwrap();
        assert!((f.cofactors[(0, 0)] - 0.8125).abs() < 1e-15);
        assert!((f.determinant - 0.375).abs() < 1e-15);
        assert!(toeplitz_cofactors(1.75, 0.25, 2).is_err());
    }

    #[test]
    fn conditional_variance_example() {
        let v = toeplitz_conditional_variance(1.75, 0.25, 2).unwrap();
        assert!((v - 1.5 / 3.25).abs() < 1e-15);
    }

    #[test]
    fn eigen_examples() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        assert!(eigen_sufficiency(&d, 1.0));
        assert!(!eigen_sufficiency(&d, 1.5));
    }

    #[test]
    fn sampled_mode_includes_singletons() {
        let s = linear_toeplitz(1.75, 0.1, 6).unwrap();
        let r = coherent_pd_check(&s, 0.1, CoherenceMode::Sampled { subsets: 10, seed: 4 }).unwrap();
        assert_eq!(r.subsets_checked, 22);
        assert!(!r.exhaustive);
    }
}

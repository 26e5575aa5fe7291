//! Cholesky factorisation with a jitter ladder, shared by sampling and Schur solves.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Lower-triangular factor together with the diagonal jitter that made it succeed.
#[derive(Clone, Debug)]
pub struct Factor {
    pub lower: DMatrix<f64>,
    pub jitter: f64,
}

/// Whether zero pivots are acceptable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PivotRule {
    /// Positive semidefinite input: an exactly zero pivot is accepted when the rest of
    /// its column is exactly zero too (constant or duplicated coordinates). Enough for
    /// sampling, not for solving.
    Semidefinite,
    /// Every pivot must exceed `1e-14 * max diagonal`, so the factor can be used for solves.
    Definite,
}

/// Plain Cholesky `a = L L^T`, or `None` when a pivot fails the rule.
pub fn cholesky(a: &DMatrix<f64>, rule: PivotRule) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let max_diag = (0..n).map(|i| a[(i, i)]).fold(0.0_f64, f64::max);
    let floor = 1e-14 * max_diag;
    let mut l = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let mut d = a[(k, k)];
        for j in 0..k {
            d -= l[(k, j)] * l[(k, j)];
        }
        let residual = |l: &DMatrix<f64>, i: usize| {
            let mut s = a[(i, k)];
            for j in 0..k {
                s -= l[(i, j)] * l[(k, j)];
            }
            s
        };
        let ok_pivot = match rule {
            PivotRule::Definite => d > floor && d > 0.0,
            PivotRule::Semidefinite => d > 0.0,
        };
        if ok_pivot {
            let root = d.sqrt();
            l[(k, k)] = root;
            for i in k + 1..n {
                l[(i, k)] = residual(&l, i) / root;
            }
        } else if rule == PivotRule::Semidefinite && d == 0.0 && (k + 1..n).all(|i| residual(&l, i) == 0.0) {
            continue;
        } else {
            return None;
        }
    }
    Some(l)
}

/// Tries jitter 0, then `1e-12 * trace/M` doubling up to `1e-6 * trace/M`.
pub fn cholesky_with_jitter(a: &DMatrix<f64>, rule: PivotRule) -> Result<Factor> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Factor { lower: DMatrix::zeros(0, 0), jitter: 0.0 });
    }
    if let Some(lower) = cholesky(a, rule) {
        return Ok(Factor { lower, jitter: 0.0 });
    }
    let scale = a.trace() / n as f64;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Factorization { jitter: 0.0 });
    }
    let mut jitter = 1e-12 * scale;
    let max = 1e-6 * scale;
    while jitter <= max * (1.0 + 1e-12) {
        let mut shifted = a.clone();
        for i in 0..n {
            shifted[(i, i)] += jitter;
        }
        if let Some(lower) = cholesky(&shifted, rule) {
            return Ok(Factor { lower, jitter });
        }
        jitter *= 2.0;
    }
    Err(Error::Factorization { jitter: jitter / 2.0 })
}

/// Solves `L x = b` for lower-triangular `L` with nonzero diagonal.
pub fn forward_solve(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for i in 0..n {
        let mut s = x[i];
        for j in 0..i {
            s -= l[(i, j)] * x[j];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// `||L L^T - (a + jitter I)||_F / ||a + jitter I||_F` (absolute when the target is zero).
pub fn reconstruction_error(a: &DMatrix<f64>, f: &Factor) -> f64 {
    let mut target = a.clone();
    for i in 0..a.nrows() {
        target[(i, i)] += f.jitter;
    }
    let diff = (&f.lower * f.lower.transpose() - &target).norm();
    let scale = target.norm();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Largest relative asymmetry `|a_ij - a_ji| / max|a|`.
pub fn asymmetry(a: &DMatrix<f64>) -> f64 {
    let scale = a.amax();
    if scale == 0.0 {
        return 0.0;
    }
    (a - a.transpose()).amax() / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factors_spd() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 3.0]);
        let f = cholesky_with_jitter(&a, PivotRule::Definite).unwrap();
        assert_eq!(f.jitter, 0.0);
        assert!(reconstruction_error(&a, &f) < 1e-15);
    }

    #[test]
    fn zero_matrix_is_semidefinite_only() {
        let z = DMatrix::<f64>::zeros(3, 3);
        let f = cholesky_with_jitter(&z, PivotRule::Semidefinite).unwrap();
        assert_eq!(f.lower, z);
        assert!(cholesky_with_jitter(&z, PivotRule::Definite).is_err());
    }

    #[test]
    fn singular_needs_jitter_for_solves() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 6.0, 6.0, 9.0]);
        assert!(cholesky(&a, PivotRule::Definite).is_none());
        let f = cholesky_with_jitter(&a, PivotRule::Definite).unwrap();
        assert!(f.jitter > 0.0);
    }

    #[test]
    fn indefinite_fails() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(cholesky_with_jitter(&a, PivotRule::Semidefinite).is_err());
    }
}

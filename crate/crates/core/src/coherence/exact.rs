//! Exact rational arithmetic for the Toeplitz identities and Schur complements.
//!
//! The linear Toeplitz family attains its coherence threshold exactly, so a
//! floating-point comparison against that threshold is decided by rounding. These
//! routines settle such cases without rounding, at desk-scale sizes.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rational = BigRational;
pub type RationalMatrix = Vec<Vec<Rational>>;

pub fn ratio(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// The decimal number printed by `{x}`, e.g. `0.1` becomes `1/10` rather than the
/// binary value of the float. `None` for non-finite input.
pub fn from_decimal(x: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let text = format!("{x}");
    let (negative, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.as_str()),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    let numer: BigInt = format!("{whole}{frac}").parse().ok()?;
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    let q = BigRational::new(numer, denom);
    Some(if negative { -q } else { q })
}

/// Entries `c - delta |i - j|`.
pub fn linear_toeplitz(c: &Rational, delta: &Rational, size: usize) -> RationalMatrix {
    (0..size)
        .map(|i| (0..size).map(|j| c - delta * ratio(i.abs_diff(j) as i64, 1)).collect())
        .collect()
}

/// Determinant by Gaussian elimination with exact pivots.
pub fn determinant(a: &RationalMatrix) -> Rational {
    let n = a.len();
    let mut m = a.clone();
    let mut det = Rational::one();
    for k in 0..n {
        let Some(piv) = (k..n).find(|&r| !m[r][k].is_zero()) else {
            return Rational::zero();
        };
        if piv != k {
            m.swap(piv, k);
            det = -det;
        }
        det *= m[k][k].clone();
        for r in k + 1..n {
            if m[r][k].is_zero() {
                continue;
            }
            let f = &m[r][k] / &m[k][k];
            for c in k..n {
                let delta = &f * &m[k][c];
                m[r][c] -= delta;
            }
        }
    }
    det
}

/// Matrix with row `i` and column `j` removed.
pub fn minor_matrix(a: &RationalMatrix, i: usize, j: usize) -> RationalMatrix {
    a.iter()
        .enumerate()
        .filter(|(r, _)| *r != i)
        .map(|(_, row)| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| v.clone()).collect())
        .collect()
}

/// Signed cofactor `(-1)^(i+j) det(minor(i, j))`.
pub fn cofactor(a: &RationalMatrix, i: usize, j: usize) -> Rational {
    let d = determinant(&minor_matrix(a, i, j));
    if (i + j).is_multiple_of(2) {
        d
    } else {
        -d
    }
}

/// The closed-form cofactor matrix and determinant of the `p x p` matrix, in exact arithmetic.
pub fn cofactor_closed_form(c: &Rational, delta: &Rational, p: usize) -> (RationalMatrix, Rational) {
    assert!(p >= 3, "closed forms hold for p >= 3");
    let two = |k: usize| ratio(1i64 << k, 1);
    let pw = |k: usize| num_traits::pow(delta.clone(), k);
    let pr = |v: usize| ratio(v as i64, 1);
    let end_diag = two(p - 2) * c * pw(p - 2) - pr(p - 2) * two(p - 3) * pw(p - 1);
    let mid_diag = two(p - 1) * c * pw(p - 2) - pr(p - 1) * two(p - 2) * pw(p - 1);
    let band = -(two(p - 2) * c * pw(p - 2)) + pr(p - 1) * two(p - 3) * pw(p - 1);
    let corner = two(p - 3) * pw(p - 1);
    let last = p - 1;
    let m = (0..p)
        .map(|i| {
            (0..p)
                .map(|j| {
                    if i == j {
                        if i == 0 || i == last {
                            end_diag.clone()
                        } else {
                            mid_diag.clone()
                        }
                    } else if i.abs_diff(j) == 1 {
                        band.clone()
                    } else if (i, j) == (0, last) || (i, j) == (last, 0) {
                        corner.clone()
                    } else {
                        Rational::zero()
                    }
                })
                .collect()
        })
        .collect();
    let det = two(p - 1) * c * pw(p - 1) - pr(p - 1) * two(p - 2) * pw(p);
    (m, det)
}

/// Solves `a x = b` column by column (Gauss-Jordan). `None` if `a` is singular.
fn solve(a: &RationalMatrix, b: &RationalMatrix) -> Option<RationalMatrix> {
    let n = a.len();
    let k = b.first().map(Vec::len).unwrap_or(0);
    let mut m: RationalMatrix = a.iter().zip(b).map(|(r, s)| r.iter().chain(s).cloned().collect()).collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(piv, col);
        let inv = m[col][col].recip();
        for v in m[col].iter_mut() {
            *v *= &inv;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in col..n + k {
                    let delta = &f * &m[col][c];
                    m[r][c] -= delta;
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Exact conditional variances of the rows in `subset` given the others.
/// `None` when the complement block is singular.
pub fn schur_diagonal(a: &RationalMatrix, subset: &[usize]) -> Option<Vec<Rational>> {
    let m = a.len();
    let rest: Vec<usize> = (0..m).filter(|i| !subset.contains(i)).collect();
    if rest.is_empty() {
        return Some(subset.iter().map(|&i| a[i][i].clone()).collect());
    }
    let block: RationalMatrix = rest.iter().map(|&r| rest.iter().map(|&c| a[r][c].clone()).collect()).collect();
    let cross: RationalMatrix = rest.iter().map(|&r| subset.iter().map(|&c| a[r][c].clone()).collect()).collect();
    let x = solve(&block, &cross)?;
    Some(
        subset
            .iter()
            .enumerate()
            .map(|(col, &i)| {
                let mut v = a[i][i].clone();
                for (k, &r) in rest.iter().enumerate() {
                    v -= &a[i][r] * &x[k][col];
                }
                v
            })
            .collect(),
    )
}

/// Exhaustive exact minimum of the Schur-complement diagonals over all proper
/// nonempty subsets, with the first subset (by bitmask) attaining it.
pub fn min_schur_diagonal(a: &RationalMatrix) -> Option<(Rational, Vec<usize>)> {
    let m = a.len();
    assert!((2..=16).contains(&m), "exact exhaustive check supports 2..=16 rows");
    let mut best: Option<(Rational, Vec<usize>)> = None;
    for mask in 1u32..(1 << m) - 1 {
        let subset: Vec<usize> = (0..m).filter(|&i| mask >> i & 1 == 1).collect();
        let diag = schur_diagonal(a, &subset)?;
        let min = diag.into_iter().reduce(|x, y| if y < x { y } else { x }).expect("subset nonempty");
        if best.as_ref().is_none_or(|(b, _)| min < *b) {
            best = Some((min, subset));
        }
    }
    best
}

/// Converts to the nearest `f64`-friendly approximation (for reporting only).
pub fn to_f64(q: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or_else(|| if q.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY })
}

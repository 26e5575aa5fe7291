//! The argmax convention and empirical argmax laws on a grid.

use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::grid::ParameterGrid;

/// Smallest index attaining the maximum. NaN anywhere is an error because it means
/// a criterion evaluation went wrong.
pub fn argmax_index(values: &[f64]) -> Result<usize> {
    if values.is_empty() {
        return Err(Error::Empty("argmax input"));
    }
    let mut best = 0;
    for (j, &v) in values.iter().enumerate() {
        if v.is_nan() {
            return Err(Error::NanCriterion { index: j });
        }
        if v > values[best] {
            best = j;
        }
    }
    Ok(best)
}

/// Probability mass function over grid cells, usually estimated from replications.
#[derive(Clone, Debug)]
pub struct ArgmaxDistribution {
    masses: Vec<f64>,
    counts: Option<Vec<u64>>,
    replications: u64,
    seed: u64,
    grid: Arc<ParameterGrid>,
}

impl ArgmaxDistribution {
    /// Relative frequencies of `counts` over `replications` draws.
    pub fn from_counts(counts: Vec<u64>, seed: u64, grid: Arc<ParameterGrid>) -> Result<Self> {
        if counts.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), actual: counts.len() });
        }
        let replications: u64 = counts.iter().sum();
        if replications == 0 {
            return Err(invalid("no replications recorded"));
        }
        let r = replications as f64;
        let masses = counts.iter().map(|&c| c as f64 / r).collect();
        Ok(ArgmaxDistribution { masses, counts: Some(counts), replications, seed, grid })
    }

    /// Tallies grid indices drawn in replications.
    pub fn from_indices(indices: &[usize], seed: u64, grid: Arc<ParameterGrid>) -> Result<Self> {
        let mut counts = vec![0u64; grid.len()];
        for &j in indices {
            *counts.get_mut(j).ok_or_else(|| invalid(format!("index {j} outside grid")))? += 1;
        }
        Self::from_counts(counts, seed, grid)
    }

    /// Exact mass function (no replication counts), e.g. from a closed form.
    pub fn from_masses(masses: Vec<f64>, grid: Arc<ParameterGrid>) -> Result<Self> {
        if masses.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), actual: masses.len() });
        }
        if masses.iter().any(|&m| !(m >= 0.0 && m.is_finite())) {
            return Err(invalid("masses must be finite and nonnegative"));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("masses sum to {total}, not 1")));
        }
        Ok(ArgmaxDistribution { masses, counts: None, replications: 0, seed: 0, grid })
    }

    pub fn point_mass(index: usize, grid: Arc<ParameterGrid>) -> Result<Self> {
        let mut masses = vec![0.0; grid.len()];
        *masses.get_mut(index).ok_or_else(|| invalid(format!("index {index} outside grid")))? = 1.0;
        Self::from_masses(masses, grid)
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn counts(&self) -> Option<&[u64]> {
        self.counts.as_deref()
    }

    /// Number of replications; zero for exact mass functions.
    pub fn replications(&self) -> u64 {
        self.replications
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn grid(&self) -> &Arc<ParameterGrid> {
        &self.grid
    }

    /// Index of the largest mass (lowest index on ties).
    pub fn mode(&self) -> usize {
        argmax_index(&self.masses).expect("masses are finite and nonempty")
    }

    fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    /// Total variation: supremum over all sets of cells.
    TotalVariation,
    /// Supremum over contiguous index ranges only.
    IntervalKs,
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tv" | "total_variation" => Ok(Metric::TotalVariation),
            "interval_ks" | "intervalks" | "ks" => Ok(Metric::IntervalKs),
            other => Err(invalid(format!("unknown metric `{other}`"))),
        }
    }
}

pub fn distribution_distance(p: &ArgmaxDistribution, q: &ArgmaxDistribution, metric: Metric) -> Result<f64> {
    if !p.same_grid(q) {
        return Err(Error::GridMismatch);
    }
    Ok(match metric {
        Metric::TotalVariation => total_variation(&p.masses, &q.masses),
        Metric::IntervalKs => interval_ks(&p.masses, &q.masses),
    })
}

pub(crate) fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    (0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()).min(1.0)
}

/// `max_{a<b} |D_b - D_a|` over prefix sums `D` of `p - q`, i.e. `max D - min D`.
pub(crate) fn interval_ks(p: &[f64], q: &[f64]) -> f64 {
    let (mut d, mut lo, mut hi) = (0.0_f64, 0.0_f64, 0.0_f64);
    for (a, b) in p.iter().zip(q) {
        d += a - b;
        lo = lo.min(d);
        hi = hi.max(d);
    }
    (hi - lo).min(1.0)
}

/// Delta-method Monte Carlo standard error of the plug-in TV distance between two
/// independently estimated mass functions. Exact mass functions contribute no noise.
///
/// Cells where the estimates agree exactly get a zero sign, so a pair of identical
/// point masses has standard error zero.
pub fn tv_standard_error(p: &ArgmaxDistribution, q: &ArgmaxDistribution) -> Result<f64> {
    if !p.same_grid(q) {
        return Err(Error::GridMismatch);
    }
    let signs: Vec<f64> = p.masses.iter().zip(&q.masses).map(|(a, b)| (a - b).signum() * f64::from(a != b)).collect();
    let part = |m: &[f64], r: u64| {
        if r == 0 {
            return 0.0;
        }
        let first: f64 = signs.iter().zip(m).map(|(s, p)| s * p).sum();
        let second: f64 = signs.iter().zip(m).map(|(s, p)| s * s * p).sum();
        ((second - first * first) / r as f64).max(0.0)
    };
    Ok(0.5 * (part(&p.masses, p.replications) + part(&q.masses, q.replications)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(m: usize) -> Arc<ParameterGrid> {
        Arc::new(ParameterGrid::interval(0.0, 1.0, m).unwrap())
    }

    #[test]
    fn argmax_examples() {
        assert_eq!(argmax_index(&[0.1, 0.5, 0.3]).unwrap(), 1);
        assert_eq!(argmax_index(&[0.5, 0.5]).unwrap(), 0);
        assert_eq!(argmax_index(&[-1.0, -2.0, -0.5]).unwrap(), 2);
        assert!(matches!(argmax_index(&[0.0, f64::NAN]), Err(Error::NanCriterion { index: 1 })));
        assert!(argmax_index(&[]).is_err());
    }

    #[test]
    fn distance_examples() {
        let g = grid(3);
        let p = ArgmaxDistribution::from_masses(vec![0.5, 0.5, 0.0], g.clone()).unwrap();
        let q = ArgmaxDistribution::from_masses(vec![0.0, 0.5, 0.5], g.clone()).unwrap();
        assert_eq!(distribution_distance(&p, &q, Metric::TotalVariation).unwrap(), 0.5);
        assert_eq!(distribution_distance(&p, &p, Metric::TotalVariation).unwrap(), 0.0);
        let a = ArgmaxDistribution::point_mass(0, g.clone()).unwrap();
        let b = ArgmaxDistribution::point_mass(1, g).unwrap();
        assert_eq!(distribution_distance(&a, &b, Metric::TotalVariation).unwrap(), 1.0);
        assert_eq!(distribution_distance(&a, &b, Metric::IntervalKs).unwrap(), 1.0);
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let p = ArgmaxDistribution::point_mass(0, grid(3)).unwrap();
        let q = ArgmaxDistribution::point_mass(0, grid(4)).unwrap();
        assert!(matches!(distribution_distance(&p, &q, Metric::TotalVariation), Err(Error::GridMismatch)));
    }

    #[test]
    fn counts_become_masses() {
        let d = ArgmaxDistribution::from_indices(&[0, 2, 2, 2], 9, grid(3)).unwrap();
        assert_eq!(d.masses(), &[0.25, 0.0, 0.75]);
        assert_eq!(d.replications(), 4);
        assert_eq!(d.mode(), 2);
    }

    #[test]
    fn identical_point_masses_have_zero_se() {
        let g = grid(2);
        let p = ArgmaxDistribution::from_indices(&[1; 10], 0, g.clone()).unwrap();
        let q = ArgmaxDistribution::from_indices(&[1; 20], 1, g).unwrap();
        assert_eq!(tv_standard_error(&p, &q).unwrap(), 0.0);
    }
}

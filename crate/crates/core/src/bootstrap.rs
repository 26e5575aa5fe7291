//! Gaussian multiplier bootstrap of the argmax and the sample-splitting test.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::argmax::{argmax_index, ArgmaxDistribution};
use crate::criterion::CriterionSpec;
use crate::error::{invalid, precondition, Error, Result};
use crate::estimator::m_estimate;
use crate::exec::{stream_rng, Execution};
use crate::grid::ParameterGrid;
use crate::sample::SampleSet;

/// Bootstrap state for one dataset: `P_n` and the centred values
/// `f_theta(Z_i) - P_n(theta)`, both for the maximisation objective.
#[derive(Clone, Debug)]
pub struct BootstrapRun {
    base: Vec<f64>,
    centered: Vec<f64>,
    n: usize,
    envelope: f64,
    grid: Arc<ParameterGrid>,
}

impl BootstrapRun {
    pub fn new(spec: &CriterionSpec, grid: &Arc<ParameterGrid>, data: &SampleSet) -> Result<Self> {
        spec.check_grid(grid)?;
        let (m, n) = (grid.len(), data.len());
        let sign = spec.orientation();
        let mut centered = Vec::with_capacity(m * n);
        let mut base = Vec::with_capacity(m);
        for j in 0..m {
            let start = centered.len();
            for z in data.observations() {
                centered.push(sign * spec.evaluate(grid, j, z)?);
            }
            let row = &mut centered[start..];
            let mean = row.iter().sum::<f64>() / n as f64;
            if mean.is_nan() {
                return Err(Error::NanCriterion { index: j });
            }
            row.iter_mut().for_each(|v| *v -= mean);
            base.push(mean);
        }
        Ok(BootstrapRun { base, centered, n, envelope: spec.envelope(grid), grid: grid.clone() })
    }

    /// `P_n(theta_j)` (objective sign).
    pub fn base_criterion(&self) -> &[f64] {
        &self.base
    }

    /// Centred row for grid point `j`.
    pub fn centered_row(&self, j: usize) -> &[f64] {
        &self.centered[j * self.n..(j + 1) * self.n]
    }

    pub fn sample_size(&self) -> usize {
        self.n
    }

    pub fn envelope(&self) -> f64 {
        self.envelope
    }

    pub fn grid(&self) -> &Arc<ParameterGrid> {
        &self.grid
    }

    /// The M-estimate of the underlying data (argmax of `P_n`).
    pub fn unperturbed_index(&self) -> usize {
        argmax_index(&self.base).expect("checked finite at construction")
    }

    /// Argmax of `P_n + (1/n) sum_i e_i (f(Z_i) - P_n)`.
    ///
    /// Centred rows sum to zero, so the multipliers are demeaned first: this changes
    /// nothing mathematically but keeps rounding noise from breaking ties in `P_n`
    /// when all multipliers are equal.
    pub fn multiplier_draw(&self, e: &[f64]) -> Result<usize> {
        if e.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, actual: e.len() });
        }
        let e_bar = if e.iter().all(|&x| x == e[0]) { e[0] } else { e.iter().sum::<f64>() / self.n as f64 };
        let demeaned: Vec<f64> = e.iter().map(|x| x - e_bar).collect();
        let inv_n = 1.0 / self.n as f64;
        let values: Vec<f64> = (0..self.base.len())
            .map(|j| self.base[j] + inv_n * self.centered_row(j).iter().zip(&demeaned).map(|(c, x)| c * x).sum::<f64>())
            .collect();
        argmax_index(&values)
    }

    /// Conditional law of the bootstrap argmax; replication `r` draws its multipliers
    /// from stream `r` of `seed`.
    pub fn distribution(&self, replications: usize, seed: u64, exec: Execution) -> Result<ArgmaxDistribution> {
        if replications == 0 {
            return Err(precondition("at least one replication is required"));
        }
        let indices: Vec<usize> = exec
            .map(replications, |r| {
                let mut rng = stream_rng(seed, r as u64);
                let e: Vec<f64> = (0..self.n).map(|_| rng.sample(StandardNormal)).collect();
                self.multiplier_draw(&e)
            })
            .into_iter()
            .collect::<Result<_>>()?;
        ArgmaxDistribution::from_indices(&indices, seed, self.grid.clone())
    }
}

pub fn bootstrap_distribution(
    spec: &CriterionSpec,
    grid: &Arc<ParameterGrid>,
    data: &SampleSet,
    replications: usize,
    seed: u64,
) -> Result<ArgmaxDistribution> {
    BootstrapRun::new(spec, grid, data)?.distribution(replications, seed, Execution::default())
}

pub fn bootstrap_distribution_with(
    spec: &CriterionSpec,
    grid: &Arc<ParameterGrid>,
    data: &SampleSet,
    replications: usize,
    seed: u64,
    exec: Execution,
) -> Result<ArgmaxDistribution> {
    BootstrapRun::new(spec, grid, data)?.distribution(replications, seed, exec)
}

/// Cells of a minimum-volume acceptance region, in selection order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AcceptanceRegion {
    pub cells: Vec<usize>,
    pub mass: f64,
    pub level: f64,
}

impl AcceptanceRegion {
    pub fn contains(&self, j: usize) -> bool {
        self.cells.contains(&j)
    }

    pub fn sorted_cells(&self) -> Vec<usize> {
        let mut c = self.cells.clone();
        c.sort_unstable();
        c
    }
}

/// Greedy smallest set of cells with mass at least `1 - s`: cells are added by
/// descending mass, lower index first on ties. Cumulative masses are compared with a
/// slack of 1e-12 to absorb rounding in the mass sums.
pub fn minimum_volume_region(dist: &ArgmaxDistribution, s: f64) -> Result<AcceptanceRegion> {
    if !(s > 0.0 && s < 1.0) {
        return Err(invalid(format!("level must lie in (0, 1), got {s}")));
    }
    let masses = dist.masses();
    let mut order: Vec<usize> = (0..masses.len()).collect();
    order.sort_by(|&a, &b| masses[b].total_cmp(&masses[a]).then(a.cmp(&b)));
    let target = 1.0 - s - 1e-12;
    let mut cells = Vec::new();
    let mut mass = 0.0;
    for j in order {
        cells.push(j);
        mass += masses[j];
        if mass >= target {
            break;
        }
    }
    Ok(AcceptanceRegion { cells, mass, level: s })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Clone, Debug, Default)]
pub struct SplitTestOptions {
    /// Shuffle the observations with this seed before splitting. Off by default.
    pub shuffle_seed: Option<u64>,
    pub exec: Option<Execution>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SplitTestResult {
    pub decision: Decision,
    pub level: f64,
    pub theta_star: Vec<f64>,
    /// Bootstrap region from the first half.
    pub region: AcceptanceRegion,
    /// Estimate from the second half.
    pub estimate_index: usize,
    pub estimate: Vec<f64>,
    /// `theta* - theta_hat + theta_s` for each region cell, before snapping.
    pub shifted_region: Vec<Vec<f64>>,
    /// Grid cells nearest to the shifted points.
    pub shifted_cells: Vec<usize>,
    /// Some shifted point fell outside the grid's bounding box.
    pub outside: bool,
    pub replications: usize,
    pub seed: u64,
    pub shuffle_seed: Option<u64>,
}

/// Sample-splitting test of `H0: theta = theta_star` at level `s`.
pub fn split_test(
    spec: &CriterionSpec,
    grid: &Arc<ParameterGrid>,
    data: &SampleSet,
    theta_star: &[f64],
    s: f64,
    replications: usize,
    seed: u64,
    options: &SplitTestOptions,
) -> Result<SplitTestResult> {
    if theta_star.len() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), actual: theta_star.len() });
    }
    let data = match options.shuffle_seed {
        Some(shuffle) => {
            let mut order: Vec<usize> = (0..data.len()).collect();
            order.shuffle(&mut stream_rng(shuffle, 0));
            data.permuted(&order)?
        }
        None => data.clone(),
    };
    let (first, second) = data.split_halves()?;
    let exec = options.exec.unwrap_or_default();
    let dist = BootstrapRun::new(spec, grid, &first)?.distribution(replications, seed, exec)?;
    let region = minimum_volume_region(&dist, s)?;
    let estimate_index = m_estimate(spec, grid, &second)?;
    let estimate = grid.point(estimate_index).to_vec();
    let shifted_region: Vec<Vec<f64>> = region
        .cells
        .iter()
        .map(|&c| theta_star.iter().zip(&estimate).zip(grid.point(c)).map(|((t, e), p)| t - e + p).collect())
        .collect();
    let outside = shifted_region.iter().any(|p| !grid.contains(p));
    let shifted_cells: Vec<usize> = shifted_region.iter().map(|p| grid.nearest_index(p)).collect();
    let accept = shifted_cells.contains(&grid.nearest_index(theta_star));
    Ok(SplitTestResult {
        decision: if accept { Decision::Accept } else { Decision::Reject },
        level: s,
        theta_star: theta_star.to_vec(),
        region,
        estimate_index,
        estimate,
        shifted_region,
        shifted_cells,
        outside,
        replications,
        seed,
        shuffle_seed: options.shuffle_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(masses: Vec<f64>) -> ArgmaxDistribution {
        let g = Arc::new(ParameterGrid::interval(0.0, 1.0, masses.len()).unwrap());
        ArgmaxDistribution::from_masses(masses, g).unwrap()
    }

    #[test]
    fn region_examples() {
        let r = minimum_volume_region(&dist(vec![0.5, 0.3, 0.2]), 0.25).unwrap();
        assert_eq!(r.cells, vec![0, 1]);
        assert!((r.mass - 0.8).abs() < 1e-15);
        let r = minimum_volume_region(&dist(vec![0.25; 4]), 0.5).unwrap();
        assert_eq!(r.cells, vec![0, 1]);
        let r = minimum_volume_region(&dist(vec![0.0, 0.6, 0.0, 0.4]), 1e-9).unwrap();
        assert_eq!(r.sorted_cells(), vec![1, 3]);
        assert!(minimum_volume_region(&dist(vec![1.0]), 0.0).is_err());
        assert!(minimum_volume_region(&dist(vec![1.0]), 1.0).is_err());
    }

    #[test]
    fn zero_and_constant_multipliers_return_the_estimate() {
        let spec = CriterionSpec::cube_root();
        let grid = Arc::new(ParameterGrid::interval(0.0, 1.0, 11).unwrap());
        let data = SampleSet::scalars(&[0.1, 0.7, 1.9, 1.3, -0.4]).unwrap();
        let run = BootstrapRun::new(&spec, &grid, &data).unwrap();
        let est = m_estimate(&spec, &grid, &data).unwrap();
        for c in [-2.0, 0.0, 1.0, 5.0] {
            assert_eq!(run.multiplier_draw(&[c; 5]).unwrap(), est);
        }
        assert!(run.multiplier_draw(&[0.0; 4]).is_err());
    }

    #[test]
    fn single_observation_has_zero_centred_table() {
        let spec = CriterionSpec::cube_root();
        let grid = Arc::new(ParameterGrid::interval(0.0, 1.0, 5).unwrap());
        let data = SampleSet::scalars(&[0.5]).unwrap();
        let run = BootstrapRun::new(&spec, &grid, &data).unwrap();
        assert!((0..5).all(|j| run.centered_row(j) == [0.0]));
        assert_eq!(run.multiplier_draw(&[3.7]).unwrap(), m_estimate(&spec, &grid, &data).unwrap());
    }
}

//! Grid M-estimators, their Monte Carlo law, profiling and sieve grids.

use std::sync::Arc;

use crate::argmax::{argmax_index, ArgmaxDistribution};
use crate::criterion::{objective_values, CriterionSpec, TrigBasis};
use crate::error::{invalid, precondition, Error, Result};
use crate::exec::{stream_rng, Execution};
use crate::grid::{Axis, ParameterGrid};
use crate::sample::{DataGenSpec, SampleSet};

/// Index of the grid point maximising `orientation * Q_n`.
pub fn m_estimate(spec: &CriterionSpec, grid: &ParameterGrid, data: &SampleSet) -> Result<usize> {
    argmax_index(&objective_values(spec, grid, data)?)
}

/// Estimate from each of `replications` independent datasets. Replication `r`
/// draws its dataset from stream `r` of `seed`.
pub fn replicate_indices(
    spec: &CriterionSpec,
    grid: &ParameterGrid,
    gen: &DataGenSpec,
    replications: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<usize>> {
    if replications == 0 {
        return Err(precondition("at least one replication is required"));
    }
    spec.check_grid(grid)?;
    gen.law.check_compatible(spec)?;
    exec.map(replications, |r| {
        let mut rng = stream_rng(seed, r as u64);
        let data = gen.sample(&mut rng);
        m_estimate(spec, grid, &data)
    })
    .into_iter()
    .collect()
}

/// Monte Carlo law of the M-estimator under `gen`.
pub fn replicate_estimator(
    spec: &CriterionSpec,
    grid: &Arc<ParameterGrid>,
    gen: &DataGenSpec,
    replications: usize,
    seed: u64,
) -> Result<ArgmaxDistribution> {
    replicate_estimator_with(spec, grid, gen, replications, seed, Execution::default())
}

pub fn replicate_estimator_with(
    spec: &CriterionSpec,
    grid: &Arc<ParameterGrid>,
    gen: &DataGenSpec,
    replications: usize,
    seed: u64,
    exec: Execution,
) -> Result<ArgmaxDistribution> {
    let indices = replicate_indices(spec, grid, gen, replications, seed, exec)?;
    ArgmaxDistribution::from_indices(&indices, seed, grid.clone())
}

/// Profiles out the second axis: for each first-axis value take the maximum over the
/// second axis, then the argmax over the first. Returns the first-axis index.
pub fn profile_argmax(spec: &CriterionSpec, grid: &ParameterGrid, data: &SampleSet) -> Result<usize> {
    let (rows, cols) = product_shape(grid)?;
    profile_values(&objective_values(spec, grid, data)?, rows, cols)
}

/// Profiling on a row-major `rows x cols` table of objective values.
pub fn profile_values(values: &[f64], rows: usize, cols: usize) -> Result<usize> {
    if values.len() != rows * cols || rows == 0 || cols == 0 {
        return Err(Error::LengthMismatch { expected: rows * cols, actual: values.len() });
    }
    let row_max: Vec<f64> = values
        .chunks(cols)
        .map(|row| argmax_index(row).map(|k| row[k]))
        .collect::<Result<_>>()?;
    argmax_index(&row_max)
}

fn product_shape(grid: &ParameterGrid) -> Result<(usize, usize)> {
    match grid.axes() {
        Some([a, b]) => Ok((a.len(), b.len())),
        _ => Err(Error::NotProductGrid),
    }
}

/// Product grid over the coefficients `w_1..w_K` of the trigonometric sieve,
/// `points_per_axis` values on `[lo, hi]` per coefficient.
pub fn sieve_grid(basis_count: usize, coefficient_box: (f64, f64), points_per_axis: usize) -> Result<ParameterGrid> {
    TrigBasis::new(basis_count)?;
    let (lo, hi) = coefficient_box;
    if points_per_axis < 2 {
        return Err(invalid("sieve grids need at least two points per axis"));
    }
    let axes = (1..=basis_count)
        .map(|k| Axis::linspace(format!("w{k}"), lo, hi, points_per_axis))
        .collect::<Result<Vec<_>>>()?;
    ParameterGrid::product(axes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criterion::Table;

    #[test]
    fn estimator_examples() {
        let cube = CriterionSpec::cube_root();
        let grid = ParameterGrid::interval(0.0, 1.0, 3).unwrap();
        assert_eq!(m_estimate(&cube, &grid, &SampleSet::scalars(&[0.3, 0.4]).unwrap()).unwrap(), 0);

        let lad = CriterionSpec::lad(1.0, 1.0).unwrap();
        let grid = ParameterGrid::interval(0.0, 0.5, 2).unwrap();
        assert_eq!(m_estimate(&lad, &grid, &SampleSet::pairs(&[(1.0, 0.5)]).unwrap()).unwrap(), 1);

        let table = Table::from_rows(&[vec![0.0], vec![1.0], vec![3.0], vec![2.0]]).unwrap();
        let grid = ParameterGrid::interval(0.0, 3.0, 4).unwrap();
        let data = SampleSet::indices(&[0]).unwrap();
        assert_eq!(m_estimate(&CriterionSpec::tabulated(table), &grid, &data).unwrap(), 2);
    }

    #[test]
    fn profiling_examples() {
        assert_eq!(profile_values(&[1.0, 2.0, 3.0, 0.0], 2, 2).unwrap(), 1);
        assert_eq!(profile_values(&[4.0; 4], 2, 2).unwrap(), 0);
        assert_eq!(profile_values(&[5.0, 1.0, 0.0, 5.0], 2, 2).unwrap(), 0);
        let flat = ParameterGrid::interval(0.0, 1.0, 4).unwrap();
        let data = SampleSet::scalars(&[0.5]).unwrap();
        assert!(matches!(profile_argmax(&CriterionSpec::cube_root(), &flat, &data), Err(Error::NotProductGrid)));
    }

    #[test]
    fn sieve_grid_shapes() {
        let g = sieve_grid(1, (-1.0, 1.0), 5).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g.spacing(), 0.5);
        let g = sieve_grid(2, (-1.0, 1.0), 3).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.point(1), &[-1.0, 0.0]);
        assert!(sieve_grid(4, (-1.0, 1.0), 3).is_err());
    }
}

//! Gaussian counterpart models on a grid and the law of their argmax.
//!
//! A model holds the mean and covariance of the *maximisation objective*
//! `orientation * f_theta(Z)` for one observation. The counterpart of `Q_n` at
//! sample size `n` is obtained with [`GaussianModel::for_sample_size`], which
//! divides the covariance by `n`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::argmax::{argmax_index, ArgmaxDistribution};
use crate::criterion::{CriterionKind, CriterionSpec};
use crate::error::{invalid, Error, Result};
use crate::exec::{stream_rng, Execution};
use crate::grid::ParameterGrid;
use crate::linalg::{asymmetry, cholesky_with_jitter, PivotRule};
use crate::moments::{paper_moments, population_moments, Moments};
use crate::sample::DataLaw;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ModelSource {
    /// Printed closed form.
    Analytic,
    /// Exact or quadrature moments under a stated law.
    Quadrature,
    /// Plug-in moments from Monte Carlo draws.
    MonteCarlo { samples: usize },
}

#[derive(Clone, Debug)]
pub struct GaussianModel {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    chol: DMatrix<f64>,
    /// Lower factor packed row by row, for fast sampling.
    packed: Vec<f64>,
    jitter_used: f64,
    source: ModelSource,
    grid: Arc<ParameterGrid>,
}

impl GaussianModel {
    /// Validates and factorises a model. The covariance must be symmetric to 1e-10
    /// (relative) and have a nonnegative diagonal; it is symmetrised before factoring.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>, source: ModelSource, grid: Arc<ParameterGrid>) -> Result<Self> {
        let m = grid.len();
        if mean.len() != m || cov.nrows() != m || cov.ncols() != m {
            return Err(Error::LengthMismatch { expected: m, actual: mean.len().max(cov.nrows()) });
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("model moments must be finite"));
        }
        if asymmetry(&cov) > 1e-10 {
            return Err(invalid("covariance is not symmetric"));
        }
        if let Some(i) = (0..m).find(|&i| cov[(i, i)] < 0.0) {
            return Err(invalid(format!("covariance diagonal entry {i} is negative ({})", cov[(i, i)])));
        }
        let cov = (&cov + cov.transpose()) * 0.5;
        let factor = cholesky_with_jitter(&cov, PivotRule::Semidefinite)?;
        let packed = pack_lower(&factor.lower);
        Ok(GaussianModel { mean, cov, chol: factor.lower, packed, jitter_used: factor.jitter, source, grid })
    }

    fn from_moments(spec: &CriterionSpec, moments: Moments, source: ModelSource, grid: Arc<ParameterGrid>) -> Result<Self> {
        let mean = moments.mean * spec.orientation();
        Self::new(mean, moments.cov, source, grid)
    }

    /// Model of `Q_n` for `n` observations: same mean, covariance divided by `n`.
    pub fn for_sample_size(&self, n: usize) -> Self {
        let scale = 1.0 / n as f64;
        let chol = &self.chol * scale.sqrt();
        GaussianModel {
            mean: self.mean.clone(),
            cov: &self.cov * scale,
            packed: pack_lower(&chol),
            chol,
            jitter_used: self.jitter_used * scale,
            source: self.source,
            grid: self.grid.clone(),
        }
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn chol(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn jitter_used(&self) -> f64 {
        self.jitter_used
    }

    pub fn source(&self) -> ModelSource {
        self.source
    }

    pub fn grid(&self) -> &Arc<ParameterGrid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// Draws `mean + L xi` into `out` using `xi` as scratch.
    pub fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, xi: &mut [f64], out: &mut [f64]) {
        let m = self.len();
        for v in xi.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let mut offset = 0;
        for i in 0..m {
            let row = &self.packed[offset..offset + i + 1];
            out[i] = self.mean[i] + row.iter().zip(&xi[..=i]).map(|(l, x)| l * x).sum::<f64>();
            offset += i + 1;
        }
    }
}

fn pack_lower(l: &DMatrix<f64>) -> Vec<f64> {
    let m = l.nrows();
    let mut packed = Vec::with_capacity(m * (m + 1) / 2);
    for i in 0..m {
        for k in 0..=i {
            packed.push(l[(i, k)]);
        }
    }
    packed
}

/// Closed-form model. Only the cube-root family has a usable printed form; the LAD
/// and minimum-volume forms are available through [`analytic_model_with`] with
/// `paper_formulas = true`, and usually fail to factorise (they are not valid
/// covariances).
pub fn analytic_model(spec: &CriterionSpec, grid: &Arc<ParameterGrid>) -> Result<GaussianModel> {
    analytic_model_with(spec, grid, false)
}

pub fn analytic_model_with(spec: &CriterionSpec, grid: &Arc<ParameterGrid>, paper_formulas: bool) -> Result<GaussianModel> {
    match spec.kind() {
        CriterionKind::CubeRoot => {}
        CriterionKind::LadRegression { .. } | CriterionKind::MinVolume { .. } if paper_formulas => {}
        _ => {
            return Err(Error::NoClosedForm(format!(
                "{} criterion (printed forms need the paper-formula flag)",
                spec.name()
            )))
        }
    }
    let moments = paper_moments(spec, grid)?;
    GaussianModel::from_moments(spec, moments, ModelSource::Analytic, grid.clone())
}

/// Model from exact/quadrature population moments under `law`.
pub fn quadrature_model(spec: &CriterionSpec, grid: &Arc<ParameterGrid>, law: &DataLaw) -> Result<GaussianModel> {
    let moments = population_moments(spec, grid, law)?;
    GaussianModel::from_moments(spec, moments, ModelSource::Quadrature, grid.clone())
}

/// Plug-in moments with their Monte Carlo standard errors (natural sign of `f`).
#[derive(Clone, Debug)]
pub struct MomentEstimate {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub mean_se: DVector<f64>,
    pub cov_se: DMatrix<f64>,
    pub samples: usize,
}

/// Estimates moments from `samples` draws of `law` (one generator stream from `seed`).
///
/// Values are centred at the first draw before averaging, so a constant criterion
/// yields an exactly zero covariance.
pub fn mc_moments(spec: &CriterionSpec, grid: &ParameterGrid, law: &DataLaw, samples: usize, seed: u64) -> Result<MomentEstimate> {
    if samples < 1000 {
        return Err(crate::error::precondition(format!("Monte Carlo moments need at least 1000 samples, got {samples}")));
    }
    spec.check_grid(grid)?;
    law.validate()?;
    let m = grid.len();
    let mut rng = stream_rng(seed, 0);
    let mut values = vec![0.0; samples * m];
    let mut first = None;
    let mut all_same = true;
    for k in 0..samples {
        let z = law.draw(&mut rng);
        match first {
            None => first = Some(z),
            Some(f) => all_same &= f == z,
        }
        for j in 0..m {
            values[k * m + j] = spec.evaluate(grid, j, &z)?;
        }
    }
    if all_same {
        return Err(Error::DegenerateSampler { samples });
    }
    let shift: Vec<f64> = values[..m].to_vec();
    for k in 0..samples {
        for j in 0..m {
            values[k * m + j] -= shift[j];
        }
    }
    let n = samples as f64;
    let mut centre = vec![0.0; m];
    for row in values.chunks(m) {
        for (c, v) in centre.iter_mut().zip(row) {
            *c += v;
        }
    }
    centre.iter_mut().for_each(|c| *c /= n);
    let mut sum = DMatrix::<f64>::zeros(m, m);
    let mut sum_sq = DMatrix::<f64>::zeros(m, m);
    let mut mean_sq = vec![0.0; m];
    let mut dev = vec![0.0; m];
    for row in values.chunks(m) {
        for j in 0..m {
            dev[j] = row[j] - centre[j];
            mean_sq[j] += dev[j] * dev[j];
        }
        for i in 0..m {
            for j in i..m {
                let p = dev[i] * dev[j];
                sum[(i, j)] += p;
                sum_sq[(i, j)] += p * p;
            }
        }
    }
    let mut cov = DMatrix::zeros(m, m);
    let mut cov_se = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let c = sum[(i, j)] / n;
            let var_p = (sum_sq[(i, j)] / n - c * c).max(0.0);
            cov[(i, j)] = c;
            cov[(j, i)] = c;
            cov_se[(i, j)] = (var_p / n).sqrt();
            cov_se[(j, i)] = cov_se[(i, j)];
        }
    }
    let mean = DVector::from_fn(m, |j, _| shift[j] + centre[j]);
    let mean_se = DVector::from_fn(m, |j, _| (mean_sq[j] / n / n).sqrt());
    Ok(MomentEstimate { mean, cov, mean_se, cov_se, samples })
}

/// Model from Monte Carlo moment estimates.
pub fn mc_model(spec: &CriterionSpec, grid: &Arc<ParameterGrid>, law: &DataLaw, samples: usize, seed: u64) -> Result<GaussianModel> {
    let est = mc_moments(spec, grid, law, samples, seed)?;
    GaussianModel::from_moments(spec, Moments { mean: est.mean, cov: est.cov }, ModelSource::MonteCarlo { samples }, grid.clone())
}

/// Argmax index of each of `replications` draws; draw `r` uses stream `r` of `seed`.
pub fn sample_argmax_indices(model: &GaussianModel, replications: usize, seed: u64, exec: Execution) -> Vec<usize> {
    let m = model.len();
    exec.map(replications, |r| {
        let mut rng = stream_rng(seed, r as u64);
        let mut xi = vec![0.0; m];
        let mut g = vec![0.0; m];
        model.draw_into(&mut rng, &mut xi, &mut g);
        argmax_index(&g).expect("Gaussian draws are finite")
    })
}

/// Empirical law of the argmax of the Gaussian model over `replications` draws.
pub fn sample_argmax_distribution(model: &GaussianModel, replications: usize, seed: u64) -> Result<ArgmaxDistribution> {
    sample_argmax_distribution_with(model, replications, seed, Execution::default())
}

pub fn sample_argmax_distribution_with(model: &GaussianModel, replications: usize, seed: u64, exec: Execution) -> Result<ArgmaxDistribution> {
    if replications == 0 {
        return Err(crate::error::precondition("at least one replication is required"));
    }
    let indices = sample_argmax_indices(model, replications, seed, exec);
    ArgmaxDistribution::from_indices(&indices, seed, model.grid.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{reconstruction_error, Factor};

    fn grid(m: usize) -> Arc<ParameterGrid> {
        Arc::new(ParameterGrid::interval(0.0, 1.0, m).unwrap())
    }

    #[test]
    fn cube_root_closed_form_entries() {
        let g = grid(5);
        let model = analytic_model(&CriterionSpec::cube_root(), &g).unwrap();
        assert!((model.cov()[(1, 3)] - 1.25).abs() < 1e-15);
        assert!(model.mean().iter().all(|&v| v == 0.5));
        let f = Factor { lower: model.chol().clone(), jitter: model.jitter_used() };
        assert!(reconstruction_error(model.cov(), &f) < 1e-8);
    }

    #[test]
    fn single_point_model() {
        let g = Arc::new(ParameterGrid::interval(0.5, 0.5, 1).unwrap());
        let model = analytic_model(&CriterionSpec::cube_root(), &g).unwrap();
        assert!((model.chol()[(0, 0)] - 1.75_f64.sqrt()).abs() < 1e-15);
        let d = sample_argmax_distribution(&model, 10, 1).unwrap();
        assert_eq!(d.masses(), &[1.0]);
    }

    #[test]
    fn zero_covariance_puts_all_mass_on_the_mean_argmax() {
        let g = grid(3);
        let model = GaussianModel::new(DVector::from_vec(vec![0.0, 1.0, 0.0]), DMatrix::zeros(3, 3), ModelSource::Analytic, g).unwrap();
        let d = sample_argmax_distribution(&model, 50, 3).unwrap();
        assert_eq!(d.masses(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn lad_needs_flag() {
        let spec = CriterionSpec::lad(2.0, 2.0).unwrap();
        assert!(matches!(analytic_model(&spec, &grid(3)), Err(Error::NoClosedForm(_))));
    }

    #[test]
    fn sample_size_scaling() {
        let model = analytic_model(&CriterionSpec::cube_root(), &grid(4)).unwrap();
        let scaled = model.for_sample_size(4);
        assert!((scaled.cov()[(0, 0)] - 1.75 / 4.0).abs() < 1e-15);
        assert!((scaled.chol()[(0, 0)] - model.chol()[(0, 0)] / 2.0).abs() < 1e-15);
    }
}

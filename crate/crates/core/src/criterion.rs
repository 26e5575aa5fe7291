//! Criterion families `f_theta(z)` and the empirical criterion `Q_n`.
//!
//! Values are stored with their natural sign: LAD returns `|y - x theta| >= 0` even
//! though it is minimised. [`CriterionSpec::orientation`] gives the sign that turns
//! each family into a maximisation problem, and every argmax in the crate is taken
//! over `orientation * Q_n`.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{invalid, Error, Result};
use crate::grid::ParameterGrid;
use crate::sample::SampleSet;

/// Kernel weight for the minimum-volume criterion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Kernel {
    /// Standard normal density.
    #[default]
    Gaussian,
    /// Box kernel `1{|u| <= 1}` (weight one inside the window).
    Uniform,
    /// `0.75 (1 - u^2)_+`.
    Epanechnikov,
}

impl Kernel {
    pub fn peak(self) -> f64 {
        match self {
            Kernel::Gaussian => 1.0 / (2.0 * PI).sqrt(),
            Kernel::Uniform => 1.0,
            Kernel::Epanechnikov => 0.75,
        }
    }

    /// Kernel weight, clipped to `[0, peak]`.
    pub fn weight(self, u: f64) -> f64 {
        let w = match self {
            Kernel::Gaussian => (-0.5 * u * u).exp() / (2.0 * PI).sqrt(),
            Kernel::Uniform => {
                if u.abs() <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Kernel::Epanechnikov => 0.75 * (1.0 - u * u).max(0.0),
        };
        w.clamp(0.0, self.peak())
    }

    /// Points where the kernel is not smooth (for quadrature breakpoints).
    pub fn kinks(self) -> &'static [f64] {
        match self {
            Kernel::Gaussian => &[],
            Kernel::Uniform | Kernel::Epanechnikov => &[-1.0, 1.0],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Gaussian => "gaussian",
            Kernel::Uniform => "uniform",
            Kernel::Epanechnikov => "epanechnikov",
        }
    }
}

impl std::str::FromStr for Kernel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Kernel::Gaussian),
            "uniform" | "box" => Ok(Kernel::Uniform),
            "epanechnikov" => Ok(Kernel::Epanechnikov),
            other => Err(invalid(format!("unknown kernel `{other}`"))),
        }
    }
}

/// Trigonometric sieve basis on `[0, 1]`: `1`, `sqrt(2) cos(2 pi t)`, `sqrt(2) sin(2 pi t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrigBasis {
    count: usize,
}

impl TrigBasis {
    pub const MAX_TERMS: usize = 3;

    pub fn new(count: usize) -> Result<Self> {
        if count == 0 || count > Self::MAX_TERMS {
            return Err(invalid(format!("sieve basis supports 1..={} terms, got {count}", Self::MAX_TERMS)));
        }
        Ok(TrigBasis { count })
    }

    pub fn len(self) -> usize {
        self.count
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn term(self, k: usize, t: f64) -> f64 {
        match k {
            0 => 1.0,
            1 => SQRT_2 * (2.0 * PI * t).cos(),
            2 => SQRT_2 * (2.0 * PI * t).sin(),
            _ => unreachable!("basis index checked at construction"),
        }
    }

    /// Supremum of `|term k|` over the real line.
    pub fn term_bound(self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            SQRT_2
        }
    }

    /// `sum_k w_k phi_k(t)`.
    pub fn expand(self, weights: &[f64], t: f64) -> f64 {
        weights.iter().enumerate().map(|(k, w)| w * self.term(k, t)).sum()
    }
}

/// Dense table of criterion values, one row per grid point and one column per observation.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    rows: usize,
    columns: usize,
    values: Vec<f64>,
}

impl Table {
    pub fn new(rows: usize, columns: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || columns == 0 {
            return Err(invalid("table must have at least one row and one column"));
        }
        if values.len() != rows * columns {
            return Err(Error::LengthMismatch { expected: rows * columns, actual: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("table entries must be finite"));
        }
        Ok(Table { rows, columns, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let columns = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != columns) {
            return Err(invalid("table rows must have equal length"));
        }
        Self::new(rows.len(), columns, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn get(&self, row: usize, column: usize) -> Result<f64> {
        if row >= self.rows || column >= self.columns {
            return Err(Error::TableOutOfRange { row, column, rows: self.rows, columns: self.columns });
        }
        Ok(self.values[row * self.columns + column])
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.columns..(row + 1) * self.columns]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CriterionKind {
    /// `1{theta - 1 <= z <= theta + 1}`.
    CubeRoot,
    /// `|y - x theta|`; with a second parameter `eta`, `|y - x theta - eta|`; with a
    /// sieve, `|y - sum_k w_k phi_k(x)|`. Observations must satisfy `|y| <= y_bound`
    /// and `|x| <= x_bound`.
    LadRegression { y_bound: f64, x_bound: f64, sieve: Option<TrigBasis> },
    /// `K((x - x0)/h) 1{theta - half_width <= y <= theta + half_width}` on `[0,1]^2`.
    MinVolume { half_width: f64, bandwidth: f64, kernel: Kernel, x0: f64 },
    /// Values supplied per (grid point, observation column).
    Tabulated(Table),
}

/// A single observation in the sample space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Observation {
    Scalar(f64),
    /// A covariate/response pair. LAD reads `(y, x)`, minimum-volume reads `(x, y)`;
    /// naming the fields avoids any ordering ambiguity.
    Pair { x: f64, y: f64 },
    /// Column of a tabulated criterion.
    Index(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriterionSpec {
    kind: CriterionKind,
}

impl CriterionSpec {
    pub fn cube_root() -> Self {
        CriterionSpec { kind: CriterionKind::CubeRoot }
    }

    pub fn lad(y_bound: f64, x_bound: f64) -> Result<Self> {
        if !(y_bound > 0.0 && x_bound > 0.0 && y_bound.is_finite() && x_bound.is_finite()) {
            return Err(invalid("LAD sample-space bounds must be positive and finite"));
        }
        Ok(CriterionSpec { kind: CriterionKind::LadRegression { y_bound, x_bound, sieve: None } })
    }

    pub fn min_volume(half_width: f64, bandwidth: f64, kernel: Kernel, x0: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width < 1.0) {
            return Err(invalid(format!("half-width must lie in (0, 1), got {half_width}")));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(invalid(format!("bandwidth must be positive, got {bandwidth}")));
        }
        if !(0.0..=1.0).contains(&x0) {
            return Err(invalid(format!("evaluation point must lie in [0, 1], got {x0}")));
        }
        Ok(CriterionSpec { kind: CriterionKind::MinVolume { half_width, bandwidth, kernel, x0 } })
    }

    pub fn tabulated(table: Table) -> Self {
        CriterionSpec { kind: CriterionKind::Tabulated(table) }
    }

    /// Replaces the LAD linear predictor by a sieve expansion in the covariate.
    pub fn with_sieve(self, basis: TrigBasis) -> Result<Self> {
        match self.kind {
            CriterionKind::LadRegression { y_bound, x_bound, .. } => {
                Ok(CriterionSpec { kind: CriterionKind::LadRegression { y_bound, x_bound, sieve: Some(basis) } })
            }
            _ => Err(invalid("only the LAD criterion composes with a sieve basis")),
        }
    }

    pub fn kind(&self) -> &CriterionKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            CriterionKind::CubeRoot => "cube_root",
            CriterionKind::LadRegression { .. } => "lad",
            CriterionKind::MinVolume { .. } => "min_volume",
            CriterionKind::Tabulated(_) => "tabulated",
        }
    }

    /// `+1` for criteria that are maximised, `-1` for LAD, which is minimised.
    pub fn orientation(&self) -> f64 {
        match self.kind {
            CriterionKind::LadRegression { .. } => -1.0,
            _ => 1.0,
        }
    }

    /// Checks that grid points have a dimension this criterion understands.
    pub fn check_grid(&self, grid: &ParameterGrid) -> Result<()> {
        let d = grid.dim();
        let ok = match &self.kind {
            CriterionKind::CubeRoot | CriterionKind::MinVolume { .. } => d == 1,
            CriterionKind::LadRegression { sieve: Some(b), .. } => d == b.len(),
            CriterionKind::LadRegression { sieve: None, .. } => d == 1 || d == 2,
            CriterionKind::Tabulated(t) => {
                if t.rows() != grid.len() {
                    return Err(Error::LengthMismatch { expected: t.rows(), actual: grid.len() });
                }
                true
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.expected_dim(), actual: d })
        }
    }

    fn expected_dim(&self) -> usize {
        match &self.kind {
            CriterionKind::LadRegression { sieve: Some(b), .. } => b.len(),
            _ => 1,
        }
    }

    /// Whether `z` lies in the declared sample space.
    pub fn accepts(&self, z: &Observation) -> bool {
        match (&self.kind, *z) {
            (CriterionKind::CubeRoot, Observation::Scalar(v)) => v.is_finite(),
            (CriterionKind::LadRegression { y_bound, x_bound, .. }, Observation::Pair { x, y }) => {
                y.abs() <= *y_bound && x.abs() <= *x_bound
            }
            (CriterionKind::MinVolume { .. }, Observation::Pair { x, y }) => {
                (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y)
            }
            (CriterionKind::Tabulated(t), Observation::Index(i)) => i < t.columns(),
            _ => false,
        }
    }

    /// Envelope `b` with `|f_theta(z)| <= b` for every grid point and admissible `z`.
    pub fn envelope(&self, grid: &ParameterGrid) -> f64 {
        match &self.kind {
            CriterionKind::CubeRoot => 1.0,
            CriterionKind::LadRegression { y_bound, x_bound, sieve } => {
                let max_abs = |k: usize| grid.bounds()[k].0.abs().max(grid.bounds()[k].1.abs());
                match sieve {
                    Some(b) => y_bound + (0..b.len()).map(|k| max_abs(k) * b.term_bound(k)).sum::<f64>(),
                    None => {
                        let mut env = y_bound + x_bound * max_abs(0);
                        if grid.dim() > 1 {
                            env += max_abs(1);
                        }
                        env
                    }
                }
            }
            CriterionKind::MinVolume { kernel, .. } => kernel.peak(),
            CriterionKind::Tabulated(t) => t.values.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
        }
    }

    /// `f_theta(z)` for an explicit parameter vector. Tabulated criteria are indexed by
    /// grid position and must go through [`CriterionSpec::evaluate`].
    pub fn evaluate_at(&self, theta: &[f64], z: &Observation) -> Result<f64> {
        match &self.kind {
            CriterionKind::CubeRoot => {
                let t = scalar_param(theta)?;
                match *z {
                    Observation::Scalar(v) => Ok(cube_root_value(t, v)),
                    _ => Err(Error::ObservationMismatch("cube-root")),
                }
            }
            CriterionKind::LadRegression { sieve, .. } => match *z {
                Observation::Pair { x, y } => Ok((y - lad_prediction(*sieve, theta, x)?).abs()),
                _ => Err(Error::ObservationMismatch("LAD")),
            },
            CriterionKind::MinVolume { half_width, bandwidth, kernel, x0 } => {
                let t = scalar_param(theta)?;
                match *z {
                    Observation::Pair { x, y } => {
                        let inside = (y >= t - half_width) && (y <= t + half_width);
                        Ok(if inside { kernel.weight((x - x0) / bandwidth) } else { 0.0 })
                    }
                    _ => Err(Error::ObservationMismatch("minimum-volume")),
                }
            }
            CriterionKind::Tabulated(_) => Err(Error::TabulatedNeedsIndex),
        }
    }

    /// `f` at grid point `j`.
    pub fn evaluate(&self, grid: &ParameterGrid, j: usize, z: &Observation) -> Result<f64> {
        match (&self.kind, *z) {
            (CriterionKind::Tabulated(t), Observation::Index(i)) => t.get(j, i),
            (CriterionKind::Tabulated(_), _) => Err(Error::ObservationMismatch("tabulated")),
            _ => {
                if j >= grid.len() {
                    return Err(invalid(format!("grid index {j} out of range")));
                }
                self.evaluate_at(grid.point(j), z)
            }
        }
    }
}

/// `f_theta(z)` for an explicit parameter vector.
pub fn evaluate_criterion(spec: &CriterionSpec, theta: &[f64], z: &Observation) -> Result<f64> {
    spec.evaluate_at(theta, z)
}

#[inline]
pub(crate) fn cube_root_value(theta: f64, z: f64) -> f64 {
    if z >= theta - 1.0 && z <= theta + 1.0 {
        1.0
    } else {
        0.0
    }
}

/// Predicted response at covariate `x` under parameter `theta`.
pub(crate) fn lad_prediction(sieve: Option<TrigBasis>, theta: &[f64], x: f64) -> Result<f64> {
    match (sieve, theta.len()) {
        (Some(b), d) if d == b.len() => Ok(b.expand(theta, x)),
        (Some(b), d) => Err(Error::DimensionMismatch { expected: b.len(), actual: d }),
        (None, 1) => Ok(x * theta[0]),
        (None, 2) => Ok(x * theta[0] + theta[1]),
        (None, d) => Err(Error::DimensionMismatch { expected: 1, actual: d }),
    }
}

fn scalar_param(theta: &[f64]) -> Result<f64> {
    match theta {
        [t] => Ok(*t),
        _ => Err(Error::DimensionMismatch { expected: 1, actual: theta.len() }),
    }
}

/// Criterion values for every (grid point, observation), row-major with one row per
/// grid point. Values carry their natural sign (see the module docs).
pub fn criterion_table(spec: &CriterionSpec, grid: &ParameterGrid, data: &SampleSet) -> Result<Vec<f64>> {
    spec.check_grid(grid)?;
    let n = data.len();
    let mut out = Vec::with_capacity(grid.len() * n);
    for j in 0..grid.len() {
        for z in data.observations() {
            out.push(spec.evaluate(grid, j, z)?);
        }
    }
    Ok(out)
}

/// `Q_n(theta_j) = (1/n) sum_i f_{theta_j}(Z_i)` for every grid point.
pub fn empirical_criterion(spec: &CriterionSpec, grid: &ParameterGrid, data: &SampleSet) -> Result<Vec<f64>> {
    spec.check_grid(grid)?;
    if data.is_empty() {
        return Err(Error::Empty("sample set"));
    }
    let n = data.len() as f64;
    (0..grid.len())
        .map(|j| {
            let mut sum = 0.0;
            for z in data.observations() {
                sum += spec.evaluate(grid, j, z)?;
            }
            Ok(sum / n)
        })
        .collect()
}

/// `orientation * Q_n`, the vector whose argmax is the M-estimator.
pub fn objective_values(spec: &CriterionSpec, grid: &ParameterGrid, data: &SampleSet) -> Result<Vec<f64>> {
    let sign = spec.orientation();
    Ok(empirical_criterion(spec, grid, data)?.into_iter().map(|q| sign * q).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spot_values() {
        let cube = CriterionSpec::cube_root();
        assert_eq!(cube.evaluate_at(&[0.5], &Observation::Scalar(0.3)).unwrap(), 1.0);
        assert_eq!(cube.evaluate_at(&[0.5], &Observation::Scalar(1.6)).unwrap(), 0.0);

        let lad = CriterionSpec::lad(10.0, 10.0).unwrap();
        let v = lad.evaluate_at(&[0.5], &Observation::Pair { x: 1.0, y: 0.2 }).unwrap();
        assert!((v - 0.3).abs() < 1e-15);

        let mv = CriterionSpec::min_volume(0.3, 0.1, Kernel::Uniform, 0.4).unwrap();
        assert_eq!(mv.evaluate_at(&[0.5], &Observation::Pair { x: 0.4, y: 0.9 }).unwrap(), 0.0);
        assert_eq!(mv.evaluate_at(&[0.5], &Observation::Pair { x: 0.4, y: 0.7 }).unwrap(), 1.0);
    }

    #[test]
    fn tabulated_needs_grid_index() {
        let spec = CriterionSpec::tabulated(Table::from_rows(&[vec![1.0, 2.0]]).unwrap());
        let grid = ParameterGrid::interval(0.0, 0.0, 1).unwrap();
        assert!(matches!(spec.evaluate_at(&[0.0], &Observation::Index(0)), Err(Error::TabulatedNeedsIndex)));
        assert_eq!(spec.evaluate(&grid, 0, &Observation::Index(1)).unwrap(), 2.0);
        assert!(matches!(spec.evaluate(&grid, 0, &Observation::Index(2)), Err(Error::TableOutOfRange { .. })));
    }

    #[test]
    fn kernels_peak_at_zero() {
        for k in [Kernel::Gaussian, Kernel::Uniform, Kernel::Epanechnikov] {
            assert_eq!(k.weight(0.0), k.peak());
            assert!(k.weight(2.0) < k.peak());
        }
    }

    #[test]
    fn sieve_only_for_lad() {
        let b = TrigBasis::new(2).unwrap();
        assert!(CriterionSpec::cube_root().with_sieve(b).is_err());
        assert!(TrigBasis::new(0).is_err());
        assert!(TrigBasis::new(4).is_err());
    }
}

//! Sample sets and the data-generating laws used in simulation experiments.

use rand::Rng;
use rand_distr::{Distribution, Triangular};

use crate::criterion::{CriterionKind, CriterionSpec, Observation};
use crate::error::{invalid, Error, Result};

/// A finite sample `Z_1, ..., Z_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    observations: Vec<Observation>,
}

impl SampleSet {
    pub fn new(observations: Vec<Observation>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::Empty("sample set"));
        }
        Ok(SampleSet { observations })
    }

    /// Like [`SampleSet::new`] but also checks every observation against the
    /// criterion's sample space.
    pub fn for_criterion(spec: &CriterionSpec, observations: Vec<Observation>) -> Result<Self> {
        if let Some(i) = observations.iter().position(|z| !spec.accepts(z)) {
            return Err(invalid(format!(
                "observation {i} ({:?}) is outside the {} sample space",
                observations[i],
                spec.name()
            )));
        }
        Self::new(observations)
    }

    pub fn scalars(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| Observation::Scalar(v)).collect())
    }

    /// Pairs given as `(x, y)`.
    pub fn pairs(values: &[(f64, f64)]) -> Result<Self> {
        Self::new(values.iter().map(|&(x, y)| Observation::Pair { x, y }).collect())
    }

    pub fn indices(columns: &[usize]) -> Result<Self> {
        Self::new(columns.iter().map(|&i| Observation::Index(i)).collect())
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    /// Deterministic split: the first `ceil(n/2)` observations, then the rest.
    pub fn split_halves(&self) -> Result<(SampleSet, SampleSet)> {
        if self.len() < 2 {
            return Err(invalid("splitting needs at least two observations"));
        }
        let cut = self.len().div_ceil(2);
        Ok((
            SampleSet { observations: self.observations[..cut].to_vec() },
            SampleSet { observations: self.observations[cut..].to_vec() },
        ))
    }

    /// Returns a copy with observations permuted by `order`.
    pub fn permuted(&self, order: &[usize]) -> Result<SampleSet> {
        if order.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), actual: order.len() });
        }
        let mut seen = vec![false; self.len()];
        for &i in order {
            if i >= self.len() || std::mem::replace(&mut seen[i], true) {
                return Err(invalid("order is not a permutation"));
            }
        }
        Ok(SampleSet { observations: order.iter().map(|&i| self.observations[i]).collect() })
    }
}

/// Conditional law of the response in the minimum-volume design.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ResponseLaw {
    Uniform { lo: f64, hi: f64 },
    Triangular { lo: f64, mode: f64, hi: f64 },
}

impl ResponseLaw {
    pub fn support(self) -> (f64, f64) {
        match self {
            ResponseLaw::Uniform { lo, hi } | ResponseLaw::Triangular { lo, hi, .. } => (lo, hi),
        }
    }

    pub fn cdf(self, t: f64) -> f64 {
        match self {
            ResponseLaw::Uniform { lo, hi } => ((t - lo) / (hi - lo)).clamp(0.0, 1.0),
            ResponseLaw::Triangular { lo, mode, hi } => {
                if t <= lo {
                    0.0
                } else if t >= hi {
                    1.0
                } else if t <= mode {
                    (t - lo) * (t - lo) / ((hi - lo) * (mode - lo))
                } else {
                    1.0 - (hi - t) * (hi - t) / ((hi - lo) * (hi - mode))
                }
            }
        }
    }

    /// `P(a <= Y <= b)`, zero for empty intervals.
    pub fn interval_prob(self, a: f64, b: f64) -> f64 {
        if b < a {
            0.0
        } else {
            (self.cdf(b) - self.cdf(a)).max(0.0)
        }
    }

    fn validate(self) -> Result<()> {
        match self {
            ResponseLaw::Uniform { lo, hi } if lo < hi => Ok(()),
            ResponseLaw::Triangular { lo, mode, hi } if lo < hi && lo <= mode && mode <= hi => Ok(()),
            other => Err(invalid(format!("invalid response law {other:?}"))),
        }
    }

    fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            ResponseLaw::Uniform { lo, hi } => rng.random_range(lo..hi),
            ResponseLaw::Triangular { lo, mode, hi } => {
                Triangular::new(lo, hi, mode).expect("validated triangular law").sample(rng)
            }
        }
    }
}

/// Data-generating law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DataLaw {
    /// Scalar `Z ~ U[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// `Y = theta0 X + intercept + eps`, `X ~ U[x_lo, x_hi]` (fixed when equal),
    /// `eps ~ U[-noise_half_width, noise_half_width]`.
    LadPair { theta0: f64, intercept: f64, x_lo: f64, x_hi: f64, noise_half_width: f64 },
    /// `X ~ U[x_lo, x_hi]` (fixed when equal) and `Y` independent of `X` with the given law.
    MinVolumePair { x_lo: f64, x_hi: f64, response: ResponseLaw },
    /// Uniform draw of a column index of a tabulated criterion.
    TableColumns { columns: usize },
}

impl DataLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DataLaw::Uniform { lo, hi } => {
                if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                    return Err(invalid(format!("uniform law needs finite lo < hi, got [{lo}, {hi}]")));
                }
            }
            DataLaw::LadPair { theta0, intercept, x_lo, x_hi, noise_half_width } => {
                if !(x_lo <= x_hi && noise_half_width > 0.0) || ![theta0, intercept, x_lo, x_hi].iter().all(|v| v.is_finite()) {
                    return Err(invalid("LAD law needs x_lo <= x_hi and positive noise half-width"));
                }
            }
            DataLaw::MinVolumePair { x_lo, x_hi, response } => {
                if !(x_lo <= x_hi) {
                    return Err(invalid("minimum-volume law needs x_lo <= x_hi"));
                }
                response.validate()?;
            }
            DataLaw::TableColumns { columns } => {
                if columns == 0 {
                    return Err(invalid("table law needs at least one column"));
                }
            }
        }
        Ok(())
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Observation {
        match *self {
            DataLaw::Uniform { lo, hi } => Observation::Scalar(rng.random_range(lo..hi)),
            DataLaw::LadPair { theta0, intercept, x_lo, x_hi, noise_half_width } => {
                let x = draw_covariate(rng, x_lo, x_hi);
                let eps = rng.random_range(-noise_half_width..noise_half_width);
                Observation::Pair { x, y: theta0 * x + intercept + eps }
            }
            DataLaw::MinVolumePair { x_lo, x_hi, response } => {
                let x = draw_covariate(rng, x_lo, x_hi);
                Observation::Pair { x, y: response.draw(rng) }
            }
            DataLaw::TableColumns { columns } => Observation::Index(rng.random_range(0..columns)),
        }
    }

    /// Checks that every draw lands in the criterion's sample space.
    pub fn check_compatible(&self, spec: &CriterionSpec) -> Result<()> {
        let fail = |what: &str| Err(invalid(format!("{what} is incompatible with the {} criterion", self.name())));
        match (*self, spec.kind()) {
            (DataLaw::Uniform { .. }, CriterionKind::CubeRoot) => Ok(()),
            (DataLaw::LadPair { theta0, intercept, x_lo, x_hi, noise_half_width }, CriterionKind::LadRegression { y_bound, x_bound, .. }) => {
                let x_max = x_lo.abs().max(x_hi.abs());
                let y_max = theta0.abs() * x_max + intercept.abs() + noise_half_width;
                if x_max > *x_bound || y_max > *y_bound {
                    return fail("LAD law support");
                }
                Ok(())
            }
            (DataLaw::MinVolumePair { x_lo, x_hi, response }, CriterionKind::MinVolume { .. }) => {
                let (lo, hi) = response.support();
                if x_lo < 0.0 || x_hi > 1.0 || lo < 0.0 || hi > 1.0 {
                    return fail("minimum-volume law support");
                }
                Ok(())
            }
            (DataLaw::TableColumns { columns }, CriterionKind::Tabulated(t)) => {
                if columns != t.columns() {
                    return fail("table column count");
                }
                Ok(())
            }
            _ => fail(&format!("law `{}`", self.name())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DataLaw::Uniform { .. } => "uniform",
            DataLaw::LadPair { .. } => "lad_pair",
            DataLaw::MinVolumePair { .. } => "min_volume_pair",
            DataLaw::TableColumns { .. } => "table_columns",
        }
    }
}

fn draw_covariate<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// A law together with a sample size.
#[derive(Clone, Debug, PartialEq)]
pub struct DataGenSpec {
    pub law: DataLaw,
    pub n: usize,
    pub description: String,
}

impl DataGenSpec {
    pub fn new(law: DataLaw, n: usize) -> Result<Self> {
        law.validate()?;
        if n < 2 {
            return Err(invalid(format!("sample size must be at least 2, got {n}")));
        }
        Ok(DataGenSpec { law, n, description: format!("{} n={n}", law.name()) })
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(self.law, n).map(|g| DataGenSpec { description: self.description.clone(), ..g })
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SampleSet {
        SampleSet { observations: (0..self.n).map(|_| self.law.draw(rng)).collect() }
    }
}

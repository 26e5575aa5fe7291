//! Experiment configuration: a TOML file with one table per concern, plus
//! `--set section.key=value` overrides applied before validation.

use std::path::Path;
use std::sync::Arc;

use mestim::coherence::CoherenceMode;
use mestim::criterion::{Table, TrigBasis};
use mestim::estimator::sieve_grid;
use mestim::grid::Axis;
use mestim::sample::ResponseLaw;
use mestim::theory::{EntropySpec, RateRegime, RateSpec};
use mestim::{CriterionSpec, DataLaw, Kernel, Metric, ParameterGrid};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{config_error, CliError};

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub criterion: Option<CriterionConfig>,
    pub grid: Option<GridConfig>,
    pub data: Option<DataConfig>,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub bootstrap: BootstrapConfig,
    #[serde(default)]
    pub test: TestConfig,
    #[serde(default)]
    pub coherence: CoherenceConfig,
    #[serde(default)]
    pub rates: RatesConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CriterionConfig {
    CubeRoot,
    Lad {
        y_bound: f64,
        x_bound: f64,
        /// Number of trigonometric basis terms; replaces the grid by a sieve grid.
        sieve: Option<usize>,
    },
    MinVolume {
        half_width: f64,
        bandwidth: f64,
        #[serde(default = "default_kernel")]
        kernel: String,
        #[serde(default = "half")]
        x0: f64,
    },
    /// Rows are grid points, columns are observation indices.
    Tabulated { table: Vec<Vec<f64>> },
}

fn default_kernel() -> String {
    "gaussian".into()
}

fn half() -> f64 {
    0.5
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub label: Option<String>,
    pub second_axis: Option<AxisConfig>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub label: String,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub law: LawConfig,
    pub n: Option<usize>,
    pub n_ladder: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawConfig {
    Uniform {
        lo: f64,
        hi: f64,
    },
    LadPair {
        theta0: f64,
        #[serde(default)]
        intercept: f64,
        x_lo: f64,
        x_hi: f64,
        noise_half_width: f64,
    },
    MinVolumePair {
        x_lo: f64,
        x_hi: f64,
        response_lo: f64,
        response_hi: f64,
        /// Triangular response law when set, uniform otherwise.
        response_mode: Option<f64>,
    },
    TableColumns,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    /// Closed-form moments (cube-root only).
    Analytic,
    /// Exact moments under the configured law, by quadrature or enumeration.
    Quadrature,
    /// Monte Carlo moments.
    Mc,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub replications: usize,
    pub seed: u64,
    pub metric: String,
    pub model: ModelChoice,
    pub model_samples: usize,
    /// Force the sequential execution path.
    pub sequential: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            replications: 10_000,
            seed: 1,
            metric: "tv".into(),
            model: ModelChoice::Quadrature,
            model_samples: 100_000,
            sequential: false,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct BootstrapConfig {
    pub datasets: usize,
    /// Multiplier draws per dataset; defaults to `run.replications`.
    pub replications: Option<usize>,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig { datasets: 20, replications: None }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TestConfig {
    pub level: f64,
    /// Hypothesised value; defaults to the true parameter of the data law.
    pub theta_star: Option<Vec<f64>>,
    pub trials: usize,
    /// Bootstrap draws per trial; defaults to `run.replications`.
    pub replications: Option<usize>,
    /// Half-width of the coverage band checked by `--assert`.
    pub coverage_tolerance: f64,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig { level: 0.1, theta_star: None, trials: 500, replications: None, coverage_tolerance: 0.04 }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct CoherenceConfig {
    /// `toeplitz`, `model` (covariance of the configured Gaussian model) or `matrix`.
    pub source: String,
    pub c: f64,
    pub delta: f64,
    pub size: usize,
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Defaults to `delta` for the Toeplitz source and is required otherwise.
    pub sigma_lower_sq: Option<f64>,
    /// `exhaustive` or `sampled`.
    pub mode: String,
    pub subsets: usize,
    pub tolerance: f64,
}

impl Default for CoherenceConfig {
    fn default() -> Self {
        CoherenceConfig {
            source: "toeplitz".into(),
            c: 1.75,
            delta: 0.1,
            size: 11,
            matrix: None,
            sigma_lower_sq: None,
            mode: "exhaustive".into(),
            subsets: 10_000,
            tolerance: mestim::coherence::DEFAULT_TOLERANCE,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RatesConfig {
    /// `finite_dim`, `infinite_dim`, `bootstrap_finite` or `bootstrap_infinite`.
    pub regime: String,
    pub alpha: Option<f64>,
    pub kappa: Option<f64>,
    pub q: Option<f64>,
    pub c_l: Option<f64>,
    pub n: Vec<f64>,
    /// Entropy model for the optional entropy-integral table.
    pub entropy: Option<EntropyConfig>,
    pub epsilons: Vec<f64>,
}

impl Default for RatesConfig {
    fn default() -> Self {
        RatesConfig {
            regime: "finite_dim".into(),
            alpha: None,
            kappa: None,
            q: None,
            c_l: None,
            n: vec![1e4],
            entropy: None,
            epsilons: vec![],
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EntropyConfig {
    EuclideanCompact { dim: f64, diameter: f64 },
    PowerLaw { alpha: f64, scale: f64 },
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub softmax_cases: usize,
    pub soft_step_points: usize,
    pub derivative_trials: usize,
    pub derivative_m: Vec<usize>,
    pub derivative_beta: Vec<f64>,
    pub derivative_delta: Vec<f64>,
    pub anti_concentration_epsilons: Vec<f64>,
    pub anti_concentration_samples: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            softmax_cases: 10_000,
            soft_step_points: 10_000,
            derivative_trials: 100,
            derivative_m: vec![4, 8],
            derivative_beta: vec![1.0, 2.0],
            derivative_delta: vec![0.25, 0.5],
            anti_concentration_epsilons: vec![0.02, 0.05, 0.1],
            anti_concentration_samples: 100_000,
        }
    }
}

impl ExperimentConfig {
    /// Parses TOML text, applies `key=value` overrides (values are read as TOML,
    /// falling back to a plain string) and an optional seed, then validates.
    pub fn from_toml(text: &str, overrides: &[String], seed: Option<u64>) -> Result<Self, CliError> {
        let mut table: toml::Table = text.parse().map_err(|e| config_error(format!("config is not valid TOML: {e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        if let Some(s) = seed {
            apply_override(&mut table, &format!("run.seed={s}"))?;
        }
        let cfg: ExperimentConfig =
            toml::Value::Table(table).try_into().map_err(|e| config_error(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String], seed: Option<u64>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text, overrides, seed)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.run.replications == 0 {
            return Err(config_error("run.replications must be positive"));
        }
        self.metric()?;
        if let Some(d) = &self.data {
            if d.n.is_none() && d.n_ladder.as_ref().is_none_or(|l| l.is_empty()) {
                return Err(config_error("data needs `n` or a nonempty `n_ladder`"));
            }
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serialises");
        hex::encode(Sha256::digest(canonical.as_bytes()))[..16].to_string()
    }

    pub fn seed(&self) -> u64 {
        self.run.seed
    }

    pub fn metric(&self) -> Result<Metric, CliError> {
        self.run.metric.parse().map_err(|_| config_error(format!("unknown metric `{}`", self.run.metric)))
    }

    pub fn criterion_spec(&self) -> Result<CriterionSpec, CliError> {
        let c = self.criterion.as_ref().ok_or_else(|| config_error("missing [criterion] section"))?;
        Ok(match c {
            CriterionConfig::CubeRoot => CriterionSpec::cube_root(),
            CriterionConfig::Lad { y_bound, x_bound, sieve } => {
                let spec = CriterionSpec::lad(*y_bound, *x_bound)?;
                match sieve {
                    Some(k) => spec.with_sieve(TrigBasis::new(*k)?)?,
                    None => spec,
                }
            }
            CriterionConfig::MinVolume { half_width, bandwidth, kernel, x0 } => {
                let kernel: Kernel = kernel.parse().map_err(|_| config_error(format!("unknown kernel `{kernel}`")))?;
                CriterionSpec::min_volume(*half_width, *bandwidth, kernel, *x0)?
            }
            CriterionConfig::Tabulated { table } => CriterionSpec::tabulated(Table::from_rows(table)?),
        })
    }

    pub fn grid(&self) -> Result<Arc<ParameterGrid>, CliError> {
        let g = self.grid.as_ref().ok_or_else(|| config_error("missing [grid] section"))?;
        if let Some(CriterionConfig::Lad { sieve: Some(k), .. }) = &self.criterion {
            return Ok(Arc::new(sieve_grid(*k, (g.lo, g.hi), g.points)?));
        }
        let label = g.label.clone().unwrap_or_else(|| "theta".into());
        let grid = match &g.second_axis {
            None if g.label.is_none() => ParameterGrid::interval(g.lo, g.hi, g.points)?,
            None => ParameterGrid::product(vec![Axis::linspace(label, g.lo, g.hi, g.points)?])?,
            Some(a) => ParameterGrid::product(vec![
                Axis::linspace(label, g.lo, g.hi, g.points)?,
                Axis::linspace(a.label.clone(), a.lo, a.hi, a.points)?,
            ])?,
        };
        Ok(Arc::new(grid))
    }

    fn data_section(&self) -> Result<&DataConfig, CliError> {
        self.data.as_ref().ok_or_else(|| config_error("missing [data] section"))
    }

    pub fn law(&self) -> Result<DataLaw, CliError> {
        let law = match self.data_section()?.law {
            LawConfig::Uniform { lo, hi } => DataLaw::Uniform { lo, hi },
            LawConfig::LadPair { theta0, intercept, x_lo, x_hi, noise_half_width } => {
                DataLaw::LadPair { theta0, intercept, x_lo, x_hi, noise_half_width }
            }
            LawConfig::MinVolumePair { x_lo, x_hi, response_lo, response_hi, response_mode } => DataLaw::MinVolumePair {
                x_lo,
                x_hi,
                response: match response_mode {
                    Some(mode) => ResponseLaw::Triangular { lo: response_lo, mode, hi: response_hi },
                    None => ResponseLaw::Uniform { lo: response_lo, hi: response_hi },
                },
            },
            LawConfig::TableColumns => match &self.criterion {
                Some(CriterionConfig::Tabulated { table }) => {
                    DataLaw::TableColumns { columns: table.first().map_or(0, Vec::len) }
                }
                _ => return Err(config_error("the table_columns law needs a tabulated criterion")),
            },
        };
        law.validate()?;
        Ok(law)
    }

    /// The ladder when given, otherwise the single `n`.
    pub fn sample_sizes(&self) -> Result<Vec<usize>, CliError> {
        let d = self.data_section()?;
        let sizes = match (&d.n_ladder, d.n) {
            (Some(l), _) if !l.is_empty() => l.clone(),
            (_, Some(n)) => vec![n],
            _ => return Err(config_error("data needs `n` or `n_ladder`")),
        };
        if sizes.iter().any(|&n| n < 2) {
            return Err(config_error("sample sizes must be at least 2"));
        }
        Ok(sizes)
    }

    /// True parameter of the data law, used as the default hypothesis.
    pub fn true_parameter(&self) -> Result<Vec<f64>, CliError> {
        let grid = self.grid()?;
        match (self.law()?, grid.dim()) {
            (DataLaw::LadPair { theta0, .. }, 1) => Ok(vec![theta0]),
            (DataLaw::LadPair { theta0, intercept, .. }, 2) => Ok(vec![theta0, intercept]),
            _ => Err(config_error("test.theta_star is required for this criterion and law")),
        }
    }

    pub fn coherence_mode(&self) -> Result<CoherenceMode, CliError> {
        match self.coherence.mode.as_str() {
            "exhaustive" => Ok(CoherenceMode::Exhaustive),
            "sampled" => Ok(CoherenceMode::Sampled { subsets: self.coherence.subsets, seed: self.seed() }),
            other => Err(config_error(format!("unknown coherence mode `{other}`"))),
        }
    }

    pub fn rate_spec(&self) -> Result<RateSpec, CliError> {
        let r = &self.rates;
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| config_error(format!("rates.{name} is required for regime `{}`", r.regime)));
        let regime = match r.regime.as_str() {
            "finite_dim" => RateRegime::FiniteDim,
            "bootstrap_finite" => RateRegime::BootstrapFinite,
            "infinite_dim" => RateRegime::InfiniteDim { alpha: need(r.alpha, "alpha")?, kappa: need(r.kappa, "kappa")? },
            "bootstrap_infinite" => {
                RateRegime::BootstrapInfinite { alpha: need(r.alpha, "alpha")?, kappa: need(r.kappa, "kappa")? }
            }
            other => return Err(config_error(format!("unknown rate regime `{other}`"))),
        };
        Ok(RateSpec { regime, q: r.q, c_l: r.c_l })
    }

    pub fn entropy_spec(&self) -> Option<EntropySpec> {
        self.rates.entropy.as_ref().map(|e| match *e {
            EntropyConfig::EuclideanCompact { dim, diameter } => EntropySpec::EuclideanCompact { dim, diameter },
            EntropyConfig::PowerLaw { alpha, scale } => EntropySpec::PowerLaw { alpha, scale },
        })
    }
}

fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| config_error(format!("override `{assignment}` is not of the form key=value")))?;
    let value = parse_value(raw.trim());
    let path: Vec<&str> = key.trim().split('.').collect();
    let (last, parents) = path.split_last().expect("split yields at least one piece");
    let mut node = table;
    for p in parents {
        let entry = node.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| config_error(format!("override `{key}`: `{p}` is not a section")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

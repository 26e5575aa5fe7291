//! The six subcommands. Each `*_report` function is pure (config in, report out);
//! [`run`] adds the run directory and files.

use std::path::Path;
use std::sync::Arc;

use mestim::argmax::tv_standard_error;
use mestim::bootstrap::{split_test, BootstrapRun, Decision, SplitTestOptions};
use mestim::coherence::{self, exact, CoherenceReport};
use mestim::estimator::replicate_estimator_with;
use mestim::exec::{derive_seed, stream_rng};
use mestim::gaussian::{analytic_model, mc_model, quadrature_model, sample_argmax_distribution_with, GaussianModel};
use mestim::moments::{paper_discrepancy, DiscrepancyReport};
use mestim::theory::{
    anti_concentration_check, derivative_bound_check, entropy_integral, rate_bound, soft_step_sweep,
    softmax_sandwich_sweep, AntiConcentrationReport, DerivativeReport, RateBound, SweepReport,
};
use mestim::{distribution_distance, CriterionSpec, DataGenSpec, Execution, Metric, ParameterGrid};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::config::{ExperimentConfig, ModelChoice};
use crate::error::{config_error, CliError};
use crate::output::{num, RunOutput};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Compare,
    Bootstrap,
    Test,
    Coherence,
    Rates,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Compare => "compare",
            Command::Bootstrap => "bootstrap",
            Command::Test => "test",
            Command::Coherence => "coherence",
            Command::Rates => "rates",
            Command::Verify => "verify",
        }
    }
}

/// A named pass/fail check evaluated by `--assert`.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

// Stream tags, so that each stochastic stage draws from its own seed family.
const TAG_MODEL: u64 = 1;
const TAG_DATA: u64 = 2;
const TAG_GAUSSIAN: u64 = 3;
const TAG_MULTIPLIER: u64 = 4;
const TAG_ESTIMATOR: u64 = 5;

fn seed_for(master: u64, tag: u64, n: usize) -> u64 {
    derive_seed(derive_seed(master, tag), n as u64)
}

fn execution(cfg: &ExperimentConfig) -> Execution {
    if cfg.run.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

/// Gaussian counterpart for a single observation (`for_sample_size` rescales it).
pub fn base_model(cfg: &ExperimentConfig, spec: &CriterionSpec, grid: &Arc<ParameterGrid>) -> Result<GaussianModel, CliError> {
    Ok(match cfg.run.model {
        ModelChoice::Analytic => analytic_model(spec, grid)?,
        ModelChoice::Quadrature => quadrature_model(spec, grid, &cfg.law()?)?,
        ModelChoice::Mc => mc_model(spec, grid, &cfg.law()?, cfg.run.model_samples, derive_seed(cfg.seed(), TAG_MODEL))?,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareRow {
    pub n: usize,
    pub replications: usize,
    pub tv: f64,
    pub interval_ks: f64,
    pub tv_mc_se: f64,
    pub rate_bound_value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareReport {
    pub criterion: String,
    pub law: String,
    pub model: String,
    pub rows: Vec<CompareRow>,
}

impl CompareReport {
    /// Each step along the ladder may increase by at most three combined standard errors.
    pub fn checks(&self) -> Vec<Check> {
        decreasing_checks(self.rows.iter().map(|r| (r.n, r.tv, r.tv_mc_se)))
    }
}

fn decreasing_checks(rows: impl Iterator<Item = (usize, f64, f64)>) -> Vec<Check> {
    let rows: Vec<_> = rows.collect();
    rows.windows(2)
        .map(|w| {
            let ((n0, a, sa), (n1, b, sb)) = (w[0], w[1]);
            let slack = 3.0 * (sa * sa + sb * sb).sqrt();
            Check {
                name: format!("tv_nonincreasing_{n0}_to_{n1}"),
                pass: b - a <= slack,
                detail: format!("TV {a:.5} -> {b:.5}, allowed increase {slack:.5}"),
            }
        })
        .collect()
}

/// Monte Carlo law of the estimator against its Gaussian counterpart along the ladder.
pub fn compare_report(cfg: &ExperimentConfig) -> Result<CompareReport, CliError> {
    let spec = cfg.criterion_spec()?;
    let grid = cfg.grid()?;
    let law = cfg.law()?;
    let model = base_model(cfg, &spec, &grid)?;
    let rate = cfg.rate_spec()?;
    let exec = execution(cfg);
    let r = cfg.run.replications;
    let mut rows = Vec::new();
    for n in cfg.sample_sizes()? {
        let gen = DataGenSpec::new(law, n)?;
        let est = replicate_estimator_with(&spec, &grid, &gen, r, seed_for(cfg.seed(), TAG_ESTIMATOR, n), exec)?;
        let gauss = sample_argmax_distribution_with(&model.for_sample_size(n), r, seed_for(cfg.seed(), TAG_GAUSSIAN, n), exec)?;
        rows.push(CompareRow {
            n,
            replications: r,
            tv: distribution_distance(&est, &gauss, Metric::TotalVariation)?,
            interval_ks: distribution_distance(&est, &gauss, Metric::IntervalKs)?,
            tv_mc_se: tv_standard_error(&est, &gauss)?,
            rate_bound_value: rate_bound(&rate, n as f64)?.value,
        });
    }
    Ok(CompareReport { criterion: spec.name().into(), law: law.name().into(), model: format!("{:?}", model.source()), rows })
}

#[derive(Clone, Debug, Serialize)]
pub struct BootstrapRow {
    pub n: usize,
    pub replications: usize,
    pub datasets: usize,
    pub mean_tv: f64,
    /// Sample standard deviation over datasets; absent for a single dataset.
    pub sd_tv: Option<f64>,
    pub mean_interval_ks: f64,
    pub dataset_tv: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BootstrapReport {
    pub criterion: String,
    pub law: String,
    pub model: String,
    pub rows: Vec<BootstrapRow>,
}

impl BootstrapReport {
    /// Mean TV must decrease strictly along the ladder.
    pub fn checks(&self) -> Vec<Check> {
        self.rows
            .windows(2)
            .map(|w| Check {
                name: format!("mean_tv_decreases_{}_to_{}", w[0].n, w[1].n),
                pass: w[1].mean_tv < w[0].mean_tv,
                detail: format!("mean TV {:.5} -> {:.5}", w[0].mean_tv, w[1].mean_tv),
            })
            .collect()
    }
}

/// Multiplier-bootstrap law on `D` independent datasets per `n`, each compared with
/// the Gaussian counterpart at that `n`.
pub fn bootstrap_report(cfg: &ExperimentConfig) -> Result<BootstrapReport, CliError> {
    let spec = cfg.criterion_spec()?;
    let grid = cfg.grid()?;
    let law = cfg.law()?;
    let model = base_model(cfg, &spec, &grid)?;
    let exec = execution(cfg);
    let datasets = cfg.bootstrap.datasets;
    if datasets == 0 {
        return Err(config_error("bootstrap.datasets must be positive"));
    }
    let r = cfg.bootstrap.replications.unwrap_or(cfg.run.replications);
    let mut rows = Vec::new();
    for n in cfg.sample_sizes()? {
        let gen = DataGenSpec::new(law, n)?;
        law.check_compatible(&spec)?;
        let gauss = sample_argmax_distribution_with(&model.for_sample_size(n), r, seed_for(cfg.seed(), TAG_GAUSSIAN, n), exec)?;
        let data_seed = seed_for(cfg.seed(), TAG_DATA, n);
        let mult_seed = seed_for(cfg.seed(), TAG_MULTIPLIER, n);
        let per_dataset: Vec<Result<(f64, f64), CliError>> = exec.map(datasets, |d| {
            let data = gen.sample(&mut stream_rng(data_seed, d as u64));
            let dist = BootstrapRun::new(&spec, &grid, &data)?.distribution(r, derive_seed(mult_seed, d as u64), exec)?;
            Ok((
                distribution_distance(&dist, &gauss, Metric::TotalVariation)?,
                distribution_distance(&dist, &gauss, Metric::IntervalKs)?,
            ))
        });
        let per_dataset: Vec<(f64, f64)> = per_dataset.into_iter().collect::<Result<_, _>>()?;
        let tv: Vec<f64> = per_dataset.iter().map(|p| p.0).collect();
        let mean_tv = tv.iter().sum::<f64>() / datasets as f64;
        let sd_tv = (datasets > 1)
            .then(|| (tv.iter().map(|t| (t - mean_tv).powi(2)).sum::<f64>() / (datasets - 1) as f64).sqrt());
        rows.push(BootstrapRow {
            n,
            replications: r,
            datasets,
            mean_tv,
            sd_tv,
            mean_interval_ks: per_dataset.iter().map(|p| p.1).sum::<f64>() / datasets as f64,
            dataset_tv: tv,
        });
    }
    Ok(BootstrapReport { criterion: spec.name().into(), law: law.name().into(), model: format!("{:?}", model.source()), rows })
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub accept: bool,
    pub estimate_index: usize,
    pub region_size: usize,
    pub outside: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverageReport {
    pub criterion: String,
    pub n: usize,
    pub level: f64,
    pub theta_star: Vec<f64>,
    pub trials: usize,
    pub replications: usize,
    pub accepted: usize,
    pub coverage: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    pub outside_fraction: f64,
    pub coverage_tolerance: f64,
    pub records: Vec<TrialRecord>,
}

impl CoverageReport {
    /// The Wilson interval must meet `[1 - s - tol, 1 - s + tol]`.
    pub fn checks(&self) -> Vec<Check> {
        let target = 1.0 - self.level;
        let (lo, hi) = (target - self.coverage_tolerance, target + self.coverage_tolerance);
        vec![Check {
            name: "coverage_near_nominal".into(),
            pass: self.wilson_hi >= lo && self.wilson_lo <= hi,
            detail: format!(
                "coverage {:.4}, Wilson [{:.4}, {:.4}] vs [{lo:.4}, {hi:.4}]",
                self.coverage, self.wilson_lo, self.wilson_hi
            ),
        }]
    }
}

/// Wilson score interval at 95%.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    const Z: f64 = 1.959_963_984_540_054;
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + Z * Z / n;
    let centre = (p + Z * Z / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + Z * Z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Empirical coverage of the sample-splitting test over independent datasets.
pub fn test_report(cfg: &ExperimentConfig) -> Result<CoverageReport, CliError> {
    let spec = cfg.criterion_spec()?;
    let grid = cfg.grid()?;
    let law = cfg.law()?;
    let n = *cfg.sample_sizes()?.last().expect("nonempty ladder");
    let gen = DataGenSpec::new(law, n)?;
    law.check_compatible(&spec)?;
    let theta_star = match &cfg.test.theta_star {
        Some(t) => t.clone(),
        None => cfg.true_parameter()?,
    };
    let t = cfg.test.trials;
    if t == 0 {
        return Err(config_error("test.trials must be positive"));
    }
    let r = cfg.test.replications.unwrap_or(cfg.run.replications);
    let data_seed = seed_for(cfg.seed(), TAG_DATA, n);
    let mult_seed = seed_for(cfg.seed(), TAG_MULTIPLIER, n);
    let options = SplitTestOptions { shuffle_seed: None, exec: Some(Execution::Sequential) };
    let records: Vec<Result<TrialRecord, CliError>> = execution(cfg).map(t, |trial| {
        let data = gen.sample(&mut stream_rng(data_seed, trial as u64));
        let res = split_test(&spec, &grid, &data, &theta_star, cfg.test.level, r, derive_seed(mult_seed, trial as u64), &options)?;
        Ok(TrialRecord {
            trial,
            accept: res.decision == Decision::Accept,
            estimate_index: res.estimate_index,
            region_size: res.region.cells.len(),
            outside: res.outside,
        })
    });
    let records: Vec<TrialRecord> = records.into_iter().collect::<Result<_, _>>()?;
    let accepted = records.iter().filter(|r| r.accept).count();
    let (wilson_lo, wilson_hi) = wilson_interval(accepted, t);
    Ok(CoverageReport {
        criterion: spec.name().into(),
        n,
        level: cfg.test.level,
        theta_star,
        trials: t,
        replications: r,
        accepted,
        coverage: accepted as f64 / t as f64,
        wilson_lo,
        wilson_hi,
        outside_fraction: records.iter().filter(|r| r.outside).count() as f64 / t as f64,
        coverage_tolerance: cfg.test.coverage_tolerance,
        records,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CoherenceSummary {
    pub source: String,
    pub report: CoherenceReport,
    pub min_eigenvalue: f64,
    pub eigen_sufficient: bool,
    /// Exact minimum Schur diagonal for the Toeplitz source (as `p/q`), when the
    /// size allows exhaustive rational arithmetic.
    pub exact_min_schur_diag: Option<String>,
    pub exact_pass: Option<bool>,
}

impl CoherenceSummary {
    /// The exact verdict decides when available, the floating-point check otherwise.
    pub fn checks(&self) -> Vec<Check> {
        let pass = self.exact_pass.unwrap_or(self.report.pass);
        vec![Check {
            name: "coherent_pd".into(),
            pass,
            detail: format!(
                "min Schur diagonal {} vs sigma_lower^2 {}",
                self.exact_min_schur_diag.clone().unwrap_or_else(|| num(self.report.min_schur_diag)),
                self.report.sigma_lower_sq
            ),
        }]
    }
}

pub fn coherence_report(cfg: &ExperimentConfig) -> Result<CoherenceSummary, CliError> {
    let c = &cfg.coherence;
    let (sigma, default_level) = match c.source.as_str() {
        "toeplitz" => (coherence::linear_toeplitz(c.c, c.delta, c.size)?, Some(c.delta)),
        "model" => {
            let spec = cfg.criterion_spec()?;
            let grid = cfg.grid()?;
            (base_model(cfg, &spec, &grid)?.cov().clone(), None)
        }
        "matrix" => {
            let rows = c.matrix.as_ref().ok_or_else(|| config_error("coherence.matrix is required for source `matrix`"))?;
            let m = rows.len();
            if m == 0 || rows.iter().any(|r| r.len() != m) {
                return Err(config_error("coherence.matrix must be square and nonempty"));
            }
            (DMatrix::from_row_iterator(m, m, rows.iter().flatten().copied()), None)
        }
        other => return Err(config_error(format!("unknown coherence source `{other}`"))),
    };
    let level = c
        .sigma_lower_sq
        .or(default_level)
        .ok_or_else(|| config_error("coherence.sigma_lower_sq is required for this source"))?;
    let report = coherence::coherent_pd_check_with(&sigma, level, cfg.coherence_mode()?, c.tolerance, execution(cfg))?;
    let (exact_min, exact_pass) = if c.source == "toeplitz" && (2..=16).contains(&c.size) {
        let q = |x: f64| exact::from_decimal(x).ok_or_else(|| config_error("coherence parameters must be finite"));
        let matrix = exact::linear_toeplitz(&q(c.c)?, &q(c.delta)?, c.size);
        match exact::min_schur_diagonal(&matrix) {
            Some((min, _)) => (Some(min.to_string()), Some(min >= q(level)?)),
            None => (None, Some(false)),
        }
    } else {
        (None, None)
    };
    Ok(CoherenceSummary {
        source: c.source.clone(),
        min_eigenvalue: coherence::min_eigenvalue(&sigma),
        eigen_sufficient: coherence::eigen_sufficiency(&sigma, level),
        report,
        exact_min_schur_diag: exact_min,
        exact_pass,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RateRow {
    pub n: f64,
    pub bound: RateBound,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyRow {
    pub epsilon: f64,
    pub integral: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RatesReport {
    pub regime: String,
    pub rows: Vec<RateRow>,
    pub entropy: Vec<EntropyRow>,
}

pub fn rates_report(cfg: &ExperimentConfig) -> Result<RatesReport, CliError> {
    let spec = cfg.rate_spec()?;
    let rows = cfg.rates.n.iter().map(|&n| Ok(RateRow { n, bound: rate_bound(&spec, n)? })).collect::<Result<_, CliError>>()?;
    let entropy = match cfg.entropy_spec() {
        Some(e) => cfg
            .rates
            .epsilons
            .iter()
            .map(|&eps| Ok(EntropyRow { epsilon: eps, integral: entropy_integral(&e, eps)? }))
            .collect::<Result<_, CliError>>()?,
        None => vec![],
    };
    Ok(RatesReport { regime: cfg.rates.regime.clone(), rows, entropy })
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub softmax: SweepReport,
    pub soft_step: SweepReport,
    pub derivatives: Vec<DerivativeReport>,
    /// Two independent standard coordinates.
    pub anti_concentration_independent: Vec<AntiConcentrationReport>,
    /// The configured criterion's Gaussian model, when a criterion is configured.
    pub anti_concentration_model: Vec<AntiConcentrationReport>,
    pub discrepancies: Vec<DiscrepancyReport>,
}

impl VerifyReport {
    pub fn checks(&self) -> Vec<Check> {
        let mut checks = vec![
            Check {
                name: "softmax_sandwich".into(),
                pass: self.softmax.pass,
                detail: format!("{} cases, max violation {:e}", self.softmax.cases, self.softmax.max_violation),
            },
            Check {
                name: "soft_step_sandwich".into(),
                pass: self.soft_step.pass,
                detail: format!("{} points, max violation {:e}", self.soft_step.cases, self.soft_step.max_violation),
            },
        ];
        for d in &self.derivatives {
            checks.push(Check {
                name: format!("derivative_m{}_beta{}_delta{}", d.m, d.beta, d.delta),
                pass: d.within_bound,
                detail: format!("max {:.6} vs bound {} (x{})", d.max_first_order, d.bound, 1.0 + d.tolerance),
            });
        }
        for a in self.anti_concentration_independent.iter().chain(&self.anti_concentration_model) {
            checks.push(Check {
                name: format!("anti_concentration_m{}_eps{}", a.subset.len(), a.epsilon),
                pass: a.holds,
                detail: format!("band probability {:.5} (se {:.5}) vs bound {:.5}", a.max_band_prob, a.se_at_max, a.bound),
            });
        }
        checks
    }
}

/// Minimum Schur diagonal over all proper subsets, or the smallest conditional
/// variance in sampled mode for large grids.
fn sigma_lower(model: &GaussianModel, exec: Execution) -> Result<f64, CliError> {
    let mode = if model.len() <= coherence::EXHAUSTIVE_LIMIT {
        coherence::CoherenceMode::Exhaustive
    } else {
        coherence::CoherenceMode::Sampled { subsets: 10_000, seed: 0 }
    };
    let r = coherence::coherent_pd_check_with(model.cov(), 0.0, mode, coherence::DEFAULT_TOLERANCE, exec)?;
    if r.min_schur_diag <= 0.0 {
        return Err(mestim::Error::Precondition("model covariance is not coherently positive definite".into()).into());
    }
    Ok(r.min_schur_diag.sqrt())
}

pub fn verify_report(cfg: &ExperimentConfig) -> Result<VerifyReport, CliError> {
    let v = &cfg.verify;
    let seed = cfg.seed();
    let exec = execution(cfg);
    let softmax = softmax_sandwich_sweep(v.softmax_cases, derive_seed(seed, 11))?;
    let soft_step = soft_step_sweep(v.soft_step_points, derive_seed(seed, 12));
    let mut derivatives = Vec::new();
    for &m in &v.derivative_m {
        let subset: Vec<usize> = (0..m / 2).collect();
        for &beta in &v.derivative_beta {
            for &delta in &v.derivative_delta {
                derivatives.push(derivative_bound_check(m, beta, delta, &subset, v.derivative_trials, derive_seed(seed, 13))?);
            }
        }
    }
    let pair_grid = Arc::new(ParameterGrid::interval(0.0, 1.0, 2)?);
    let independent = GaussianModel::new(
        DVector::zeros(2),
        DMatrix::identity(2, 2),
        mestim::gaussian::ModelSource::Analytic,
        pair_grid,
    )?;
    let samples = v.anti_concentration_samples;
    let anti_independent = v
        .anti_concentration_epsilons
        .iter()
        .map(|&eps| Ok(anti_concentration_check(&independent, &[0], eps, 1.0, samples, derive_seed(seed, 14))?))
        .collect::<Result<Vec<_>, CliError>>()?;
    let anti_model = match (&cfg.criterion, &cfg.grid) {
        (Some(_), Some(_)) => {
            let spec = cfg.criterion_spec()?;
            let grid = cfg.grid()?;
            let model = base_model(cfg, &spec, &grid)?;
            let lower = sigma_lower(&model, exec)?;
            let subset: Vec<usize> = (0..model.len() / 2).collect();
            v.anti_concentration_epsilons
                .iter()
                .map(|&eps| Ok(anti_concentration_check(&model, &subset, eps, lower, samples, derive_seed(seed, 15))?))
                .collect::<Result<Vec<_>, CliError>>()?
        }
        _ => vec![],
    };
    Ok(VerifyReport {
        softmax,
        soft_step,
        derivatives,
        anti_concentration_independent: anti_independent,
        anti_concentration_model: anti_model,
        discrepancies: discrepancy_reports()?,
    })
}

/// Printed LAD and minimum-volume covariance forms against the quadrature oracle.
pub fn discrepancy_reports() -> Result<Vec<DiscrepancyReport>, CliError> {
    let lad = CriterionSpec::lad(1.0, 1.0)?;
    let lad_grid = ParameterGrid::interval(0.0, 1.0, 11)?;
    let mv = CriterionSpec::min_volume(0.25, 0.1, mestim::Kernel::Gaussian, 0.5)?;
    let mv_grid = ParameterGrid::interval(0.25, 0.75, 11)?;
    Ok(vec![paper_discrepancy(&lad, &lad_grid)?, paper_discrepancy(&mv, &mv_grid)?])
}

/// Result of a command run: where files went and how the checks came out.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub command: String,
    pub dir: String,
    pub files: Vec<String>,
    pub checks: Vec<Check>,
}

impl RunSummary {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Runs `command` and writes its CSV table(s) and JSON summary under `root`.
pub fn run(command: Command, cfg: &ExperimentConfig, root: &Path) -> Result<RunSummary, CliError> {
    let out = RunOutput::create(root, command.name(), cfg)?;
    let mut files = Vec::new();
    let checks = match command {
        Command::Compare => {
            let rep = compare_report(cfg)?;
            let rows: Vec<Vec<String>> = rep
                .rows
                .iter()
                .map(|r| {
                    vec![r.n.to_string(), r.replications.to_string(), num(r.tv), num(r.interval_ks), num(r.tv_mc_se), num(r.rate_bound_value)]
                })
                .collect();
            files.push(out.write_csv("compare.csv", &["n", "R", "TV", "IntervalKS", "TV_mc_se", "rate_bound_value"], &rows)?);
            files.push(out.write_json("summary.json", cfg, &rep)?);
            rep.checks()
        }
        Command::Bootstrap => {
            let rep = bootstrap_report(cfg)?;
            let with_sd = rep.rows.iter().all(|r| r.sd_tv.is_some());
            let mut header = vec!["n", "R", "D", "mean_TV"];
            if with_sd {
                header.push("sd_TV");
            }
            header.push("mean_IntervalKS");
            let rows: Vec<Vec<String>> = rep
                .rows
                .iter()
                .map(|r| {
                    let mut row = vec![r.n.to_string(), r.replications.to_string(), r.datasets.to_string(), num(r.mean_tv)];
                    if let (true, Some(sd)) = (with_sd, r.sd_tv) {
                        row.push(num(sd));
                    }
                    row.push(num(r.mean_interval_ks));
                    row
                })
                .collect();
            files.push(out.write_csv("bootstrap.csv", &header, &rows)?);
            files.push(out.write_json("summary.json", cfg, &rep)?);
            rep.checks()
        }
        Command::Test => {
            let rep = test_report(cfg)?;
            let rows: Vec<Vec<String>> = rep
                .records
                .iter()
                .map(|r| {
                    vec![
                        r.trial.to_string(),
                        u8::from(r.accept).to_string(),
                        r.estimate_index.to_string(),
                        r.region_size.to_string(),
                        u8::from(r.outside).to_string(),
                    ]
                })
                .collect();
            files.push(out.write_csv("trials.csv", &["trial", "accept", "estimate_index", "region_size", "outside"], &rows)?);
            files.push(out.write_csv(
                "coverage.csv",
                &["level", "trials", "coverage", "wilson_lo", "wilson_hi", "outside_fraction"],
                &[vec![
                    num(rep.level),
                    rep.trials.to_string(),
                    num(rep.coverage),
                    num(rep.wilson_lo),
                    num(rep.wilson_hi),
                    num(rep.outside_fraction),
                ]],
            )?);
            files.push(out.write_json("summary.json", cfg, &rep)?);
            rep.checks()
        }
        Command::Coherence => {
            let rep = coherence_report(cfg)?;
            files.push(out.write_json("summary.json", cfg, &rep)?);
            rep.checks()
        }
        Command::Rates => {
            let rep = rates_report(cfg)?;
            let rows: Vec<Vec<String>> = rep
                .rows
                .iter()
                .map(|r| vec![num(r.n), num(r.bound.exponent), num(r.bound.value), r.bound.binding.to_string()])
                .collect();
            files.push(out.write_csv("rates.csv", &["n", "exponent", "value", "binding"], &rows)?);
            if !rep.entropy.is_empty() {
                let rows: Vec<Vec<String>> = rep.entropy.iter().map(|e| vec![num(e.epsilon), num(e.integral)]).collect();
                files.push(out.write_csv("entropy.csv", &["epsilon", "J"], &rows)?);
            }
            files.push(out.write_json("summary.json", cfg, &rep)?);
            vec![]
        }
        Command::Verify => {
            let rep = verify_report(cfg)?;
            files.push(out.write_json("summary.json", cfg, &rep)?);
            rep.checks()
        }
    };
    Ok(RunSummary {
        command: command.name().into(),
        dir: out.dir().display().to_string(),
        files: files.iter().map(|p| p.display().to_string()).collect(),
        checks,
    })
}

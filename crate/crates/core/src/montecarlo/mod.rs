//! Seeded, parallel replication of the estimators against a known covariance.
//!
//! Replicate `i` draws its sample from `hash(seed, i)` and its jackknife
//! subsets from a separate stream, so results never depend on how many
//! worker threads run them. Summaries are computed from sorted copies of the
//! per-replicate vectors.

mod config;
pub mod stats;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use config::{
    hash_text, EstimatorMode, ExperimentConfig, ModelSpec, Standardization, MAX_REPLICATES,
};
pub use stats::NormalityReport;

use crate::error::{Error, Result};
use crate::estimators::{
    aggregate_estimate, jackknife_estimate, make_scheme, plugin_estimate,
    spectral_measure_estimate, AggregationScheme, JackknifeOptions, MeasureMode,
};
use crate::functionals::{builtin, tau_f, FunctionClassGrid, TestFunction};
use crate::linalg::{sample_covariance, sample_gaussian, sym_eigvals, CovarianceModel, SampleSet};
use crate::seed::derive_seed;
use crate::theory::{gaussian_limit_std, spectrum_limit_std};

const SAMPLE_TAG: u64 = 0x5A;
const SUBSET_TAG: u64 = 0x5B;
const RATE_TAG: u64 = 0x7A;

/// Minimum replicates for [`normality_check`].
pub const MIN_NORMALITY_REPS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub bias: f64,
    pub bias_se: f64,
    pub rmse: f64,
    pub rmse_se: f64,
    /// `(mean |error|^4)^{1/4}`.
    pub l4: f64,
    pub ks: f64,
    pub wasserstein1: f64,
    pub standardized_mean: f64,
    pub standardized_var: f64,
}

impl Summary {
    /// Recomputes every field from the stored replicates.
    pub fn from_replicates(estimates: &[f64], standardized: &[f64], truth: f64) -> Self {
        let mut est = estimates.to_vec();
        est.sort_by(f64::total_cmp);
        let mut z = standardized.to_vec();
        z.sort_by(f64::total_cmp);
        let r = est.len() as f64;

        let mean = stats::mean(&est);
        let sd = stats::sample_variance(&est).sqrt();
        let sq: Vec<f64> = est.iter().map(|x| (x - truth).powi(2)).collect();
        let mse = stats::mean(&sq);
        let rmse = mse.sqrt();
        let mse_se = (stats::sample_variance(&sq) / r).sqrt();
        let rmse_se = if rmse > 0.0 { mse_se / (2.0 * rmse) } else { 0.0 };
        let l4 = (est.iter().map(|x| (x - truth).powi(4)).sum::<f64>() / r).powf(0.25);

        Self {
            mean,
            sd,
            bias: mean - truth,
            bias_se: sd / r.sqrt(),
            rmse,
            rmse_se,
            l4,
            ks: stats::ks_normal(&z),
            wasserstein1: stats::wasserstein1_normal(&z),
            standardized_mean: stats::mean(&z),
            standardized_var: stats::sample_variance(&z),
        }
    }

    /// `(metric, value, se)` rows; `se` is empty where none applies.
    pub fn rows(&self) -> Vec<(&'static str, f64, Option<f64>)> {
        vec![
            ("mean", self.mean, Some(self.bias_se)),
            ("sd", self.sd, None),
            ("bias", self.bias, Some(self.bias_se)),
            ("rmse", self.rmse, Some(self.rmse_se)),
            ("l4", self.l4, None),
            ("ks", self.ks, None),
            ("wasserstein1", self.wasserstein1, None),
            ("standardized_mean", self.standardized_mean, None),
            ("standardized_var", self.standardized_var, None),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    /// `tau_f(Sigma)`.
    pub truth: f64,
    /// `||Sigma f'(Sigma)||_2`.
    pub limit_std: f64,
    /// Per-replicate estimates, in replicate order.
    pub estimates: Vec<f64>,
    pub standardized: Vec<f64>,
    pub summary: Summary,
}

impl ExperimentResult {
    pub fn write_replicates_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "replicate,estimate,standardized")?;
        for (i, (e, z)) in self.estimates.iter().zip(&self.standardized).enumerate() {
            writeln!(out, "{i},{e},{z}")?;
        }
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "metric,value,se")?;
        writeln!(out, "truth,{},", self.truth)?;
        writeln!(out, "limit_std,{},", self.limit_std)?;
        for (k, v, se) in self.summary.rows() {
            match se {
                Some(se) => writeln!(out, "{k},{v},{se}")?,
                None => writeln!(out, "{k},{v},")?,
            }
        }
        Ok(())
    }

    /// Writes `replicates_<hash>.csv` and `summary_<hash>.csv` into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let hash = self.config.hash();
        let rep = dir.join(format!("replicates_{hash}.csv"));
        let sum = dir.join(format!("summary_{hash}.csv"));
        write_file(&rep, |w| self.write_replicates_csv(w))?;
        write_file(&sum, |w| self.write_summary_csv(w))?;
        Ok(vec![rep, sum])
    }
}

pub(crate) fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> Result<()>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Everything a replicate needs, resolved once per experiment.
struct Prepared {
    model: CovarianceModel<f64>,
    f: TestFunction,
    scheme: Option<AggregationScheme>,
    truth: f64,
    limit_std: f64,
}

fn validate(config: &ExperimentConfig) -> Result<()> {
    if config.reps == 0 || config.reps > MAX_REPLICATES {
        return Err(Error::InvalidParameter(format!(
            "reps must be in 1..={MAX_REPLICATES}, got {}",
            config.reps
        )));
    }
    if config.n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if config.mode == EstimatorMode::Jackknife && config.subsets == 0 {
        return Err(Error::InvalidParameter("B must be positive".into()));
    }
    if config.threads == Some(0) {
        return Err(Error::InvalidParameter("threads must be positive".into()));
    }
    Ok(())
}

fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    validate(config)?;
    let model = config.build_model()?;
    let f = builtin(&config.function)?;
    let scheme = match config.mode {
        EstimatorMode::Plugin => None,
        _ => Some(make_scheme(config.m, config.n, config.q)?),
    };
    let truth = tau_f(&f, model.eigenvalues());
    let limit_std = gaussian_limit_std(&f, &model);
    Ok(Prepared {
        model,
        f,
        scheme,
        truth,
        limit_std,
    })
}

fn draw(config: &ExperimentConfig, p: &Prepared, i: usize) -> Result<SampleSet<f64>> {
    sample_gaussian(&p.model, config.n, derive_seed(config.seed, &[SAMPLE_TAG, i as u64]))
}

fn jackknife_options(config: &ExperimentConfig, i: usize) -> JackknifeOptions {
    JackknifeOptions::new(config.subsets, derive_seed(config.seed, &[SUBSET_TAG, i as u64]))
}

fn estimate_once(config: &ExperimentConfig, p: &Prepared, i: usize) -> Result<(f64, f64)> {
    let s = draw(config, p, i)?;
    let est = match (config.mode, &p.scheme) {
        (EstimatorMode::Plugin, _) => plugin_estimate(&p.f, &s)?,
        (EstimatorMode::Aggregate, Some(scheme)) => aggregate_estimate(&p.f, &s, scheme)?,
        (EstimatorMode::Jackknife, Some(scheme)) => {
            jackknife_estimate(&p.f, &s, scheme, &jackknife_options(config, i))?
        }
        _ => unreachable!("non-plugin modes always carry a scheme"),
    };
    let scale = match config.standardization {
        Standardization::Oracle => p.limit_std,
        Standardization::PlugIn => {
            spectrum_limit_std(&p.f, &sym_eigvals(sample_covariance(&s).view())?)
        }
    };
    let z = (config.n as f64).sqrt() * (est - p.truth) / (std::f64::consts::SQRT_2 * scale);
    Ok((est, z))
}

/// Runs `body` on a dedicated pool when a thread count is given.
fn with_threads<R: Send>(threads: Option<usize>, body: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(body()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            Ok(pool.install(body))
        }
    }
}

fn replicate_error(index: usize, e: Error) -> Error {
    Error::Replicate {
        index,
        source: Box::new(e),
    }
}

pub fn run(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let p = prepare(config)?;
    let pairs: Vec<(f64, f64)> = with_threads(config.threads, || {
        (0..config.reps)
            .into_par_iter()
            .map(|i| estimate_once(config, &p, i).map_err(|e| replicate_error(i, e)))
            .collect::<Result<Vec<_>>>()
    })??;
    let (estimates, standardized): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let summary = Summary::from_replicates(&estimates, &standardized, p.truth);
    Ok(ExperimentResult {
        config: config.clone(),
        truth: p.truth,
        limit_std: p.limit_std,
        estimates,
        standardized,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub n: usize,
    pub rmse: f64,
    pub rmse_se: f64,
    pub bias: f64,
    pub bias_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateSweep {
    pub config: ExperimentConfig,
    pub points: Vec<RatePoint>,
    /// OLS slope of `log RMSE` on `log n`.
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
}

impl RateSweep {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,rmse,rmse_se,bias,bias_se")?;
        for p in &self.points {
            writeln!(out, "{},{},{},{},{}", p.n, p.rmse, p.rmse_se, p.bias, p.bias_se)?;
        }
        Ok(())
    }

    pub fn write_fit_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "metric,value,se")?;
        writeln!(out, "slope,{},{}", self.slope, self.slope_se)?;
        writeln!(out, "intercept,{},", self.intercept)?;
        Ok(())
    }

    /// Writes `rates_<hash>.csv` and `rate_fit_<hash>.csv` into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let hash = self.config.hash();
        let table = dir.join(format!("rates_{hash}.csv"));
        let fit = dir.join(format!("rate_fit_{hash}.csv"));
        write_file(&table, |w| self.write_csv(w))?;
        write_file(&fit, |w| self.write_fit_csv(w))?;
        Ok(vec![table, fit])
    }
}

/// Runs the experiment at every size in `config.n_list` (size `n` seeded by
/// `hash(seed, n)`) and regresses `log RMSE` on `log n`.
pub fn rate_sweep(config: &ExperimentConfig) -> Result<RateSweep> {
    let mut ns = config.n_list.clone();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "rate sweep needs at least 3 distinct sample sizes, got {}",
            ns.len()
        )));
    }
    if ns[ns.len() - 1] < 4 * ns[0] {
        return Err(Error::InvalidParameter(format!(
            "sample sizes must span at least a factor of 4, got {}..{}",
            ns[0],
            ns[ns.len() - 1]
        )));
    }
    let mut points = Vec::with_capacity(ns.len());
    for &n in &ns {
        let mut sub = config.clone();
        sub.n = n;
        sub.n_list.clear();
        sub.seed = derive_seed(config.seed, &[RATE_TAG, n as u64]);
        let res = run(&sub)?;
        points.push(RatePoint {
            n,
            rmse: res.summary.rmse,
            rmse_se: res.summary.rmse_se,
            bias: res.summary.bias,
            bias_se: res.summary.bias_se,
        });
    }
    let x: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.rmse.ln()).collect();
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateSpectrum);
    }
    let (slope, slope_se, intercept) = stats::ols_slope(&x, &y)?;
    Ok(RateSweep {
        config: config.clone(),
        points,
        slope,
        slope_se,
        intercept,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionError {
    pub name: String,
    /// `tau_f(Sigma)`, the integral of `f` against the true spectral measure.
    pub truth: f64,
    pub bias: f64,
    pub mean_abs: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupnormResult {
    pub config: ExperimentConfig,
    pub functions: Vec<FunctionError>,
    /// Per replicate, `max_f |int f d hat mu - int f d mu_Sigma|` over the grid.
    pub max_errors: Vec<f64>,
    pub mean_max: f64,
    pub mean_max_se: f64,
}

impl SupnormResult {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "function,truth,bias,mean_abs,rmse")?;
        for f in &self.functions {
            writeln!(out, "{},{},{},{},{}", f.name, f.truth, f.bias, f.mean_abs, f.rmse)?;
        }
        writeln!(out, "max,,,{},", self.mean_max)?;
        Ok(())
    }

    pub fn write_replicates_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "replicate,max_error")?;
        for (i, e) in self.max_errors.iter().enumerate() {
            writeln!(out, "{i},{e}")?;
        }
        Ok(())
    }

    /// Writes `supnorm_<hash>.csv` and `supnorm_replicates_<hash>.csv`.
    pub fn write_to_dir(&self, dir: &Path, grid: &FunctionClassGrid) -> Result<Vec<PathBuf>> {
        let mut text = self.config.canonical_text();
        for f in grid.members() {
            text.push_str(f.name());
            text.push('\n');
        }
        let hash = hash_text(&text);
        let table = dir.join(format!("supnorm_{hash}.csv"));
        let reps = dir.join(format!("supnorm_replicates_{hash}.csv"));
        write_file(&table, |w| self.write_csv(w))?;
        write_file(&reps, |w| self.write_replicates_csv(w))?;
        Ok(vec![table, reps])
    }
}

/// Integrates every grid member against the estimated signed measure of each
/// replicate. `config.function` is not used; the plug-in mode uses the
/// empirical spectral measure of the full sample.
pub fn supnorm_experiment(grid: &FunctionClassGrid, config: &ExperimentConfig) -> Result<SupnormResult> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("function grid is empty".into()));
    }
    validate(config)?;
    let model = config.build_model()?;
    let scheme = match config.mode {
        EstimatorMode::Plugin => AggregationScheme::plug_in(config.n),
        _ => make_scheme(config.m, config.n, config.q)?,
    };
    let members = grid.members();
    let truths: Vec<f64> = members.iter().map(|f| tau_f(f, model.eigenvalues())).collect();

    let errors: Vec<Vec<f64>> = with_threads(config.threads, || {
        (0..config.reps)
            .into_par_iter()
            .map(|i| {
                let once = || -> Result<Vec<f64>> {
                    let s = sample_gaussian(
                        &model,
                        config.n,
                        derive_seed(config.seed, &[SAMPLE_TAG, i as u64]),
                    )?;
                    let mode = match config.mode {
                        EstimatorMode::Jackknife => {
                            MeasureMode::Jackknife(jackknife_options(config, i))
                        }
                        _ => MeasureMode::Aggregate,
                    };
                    let mu = spectral_measure_estimate(&s, &scheme, &mode)?;
                    Ok(members
                        .iter()
                        .zip(&truths)
                        .map(|(f, t)| mu.integrate(f) - t)
                        .collect())
                };
                once().map_err(|e| replicate_error(i, e))
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let r = config.reps as f64;
    let functions = members
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let mut col: Vec<f64> = errors.iter().map(|row| row[k]).collect();
            col.sort_by(f64::total_cmp);
            FunctionError {
                name: f.name().to_string(),
                truth: truths[k],
                bias: col.iter().sum::<f64>() / r,
                mean_abs: col.iter().map(|e| e.abs()).sum::<f64>() / r,
                rmse: (col.iter().map(|e| e * e).sum::<f64>() / r).sqrt(),
            }
        })
        .collect();
    let max_errors: Vec<f64> = errors
        .iter()
        .map(|row| row.iter().fold(0.0f64, |m, e| m.max(e.abs())))
        .collect();
    let mut sorted = max_errors.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(SupnormResult {
        config: config.clone(),
        functions,
        mean_max: stats::mean(&sorted),
        mean_max_se: (stats::sample_variance(&sorted) / r).sqrt(),
        max_errors,
    })
}

/// Runs the experiment and compares its standardized statistic with N(0, 1).
pub fn normality_check(config: &ExperimentConfig) -> Result<(ExperimentResult, NormalityReport)> {
    if config.reps < MIN_NORMALITY_REPS {
        return Err(Error::InvalidParameter(format!(
            "normality check needs at least {MIN_NORMALITY_REPS} replicates, got {}",
            config.reps
        )));
    }
    let res = run(config)?;
    let report = NormalityReport::from_sample(&res.standardized)?;
    Ok((res, report))
}

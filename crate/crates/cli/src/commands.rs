use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use spectra::estimators::DEFAULT_SUBSETS;
use spectra::montecarlo::{hash_text, MAX_REPLICATES};
use spectra::seed::derive_seed;
use spectra::theory::{effective_rank_of, esd_cdf, esd_ks_distance};
use spectra::{
    aggregate_estimate, builtin, default_grid, jackknife_estimate, make_scheme, normality_check,
    plugin_estimate, rate_budget, rate_sweep, sample_covariance, sample_gaussian,
    supnorm_experiment, sym_eigvals, AggregationScheme, CovarianceModelF64, EstimatorMode,
    ExperimentConfig, FunctionClassGrid, JackknifeOptions, MarchenkoPasturF64, ModelSpec,
    SampleSetF64, Standardization,
};

use crate::settings::{render, Resolver, SizeList};
use crate::{CliError, CoeffsArgs, EstimateArgs, EstimatorArgs, ExperimentArgs, MpArgs, SupnormArgs};

const DEFAULT_OUT: &str = "spectra-out";
const DEFAULT_REPS: usize = 1000;
const DEFAULT_GRID_SIZE: usize = 8;
const SUBSET_STREAM: u64 = 1;

type CliResult<T> = Result<T, CliError>;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Creates the output directory and writes `config.resolved`.
fn prepare_out(out: &Path, resolved: &[(String, String)]) -> CliResult<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join("config.resolved"), render(resolved))?;
    Ok(())
}

/// Hash of the settings that determine results (output directory and
/// thread count excluded), used to name output files.
fn content_hash(resolved: &[(String, String)]) -> String {
    let kept: Vec<(String, String)> = resolved
        .iter()
        .filter(|(k, _)| k != "out" && k != "threads")
        .cloned()
        .collect();
    hash_text(&render(&kept))
}

fn write_csv_file(path: &Path, header: &str, rows: &[String]) -> CliResult<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "{header}")?;
    for r in rows {
        writeln!(f, "{r}")?;
    }
    f.flush()?;
    Ok(())
}

struct Estimator {
    f: String,
    mode: EstimatorMode,
    m: usize,
    q: f64,
    b: usize,
}

fn resolve_estimator(r: &mut Resolver, a: &EstimatorArgs) -> CliResult<Estimator> {
    let f: String = r.with_default("f", a.f.clone(), "log1p".into())?;
    builtin(&f)?;
    let mode: String = r.with_default("mode", a.mode.clone(), "aggregate".into())?;
    let mode: EstimatorMode = mode.parse()?;
    let m = r.with_default("m", a.m, 2)?;
    let q = r.with_default("q", a.q, 2.0)?;
    let b = r.with_default("B", a.b, DEFAULT_SUBSETS)?;
    if b == 0 {
        return Err(config_err("B must be positive"));
    }
    Ok(Estimator { f, mode, m, q, b })
}

fn parse_model(spec: &str) -> CliResult<ModelSpec> {
    spec.parse::<ModelSpec>().map_err(|e| config_err(e.to_string()))
}

pub fn estimate(a: EstimateArgs, config: Option<&Path>) -> CliResult<()> {
    let mut r = Resolver::new("estimate", config)?;
    let data: Option<String> = r.optional("data", a.data.map(|p| p.display().to_string()))?;
    let model: Option<String> = r.optional("model", a.model)?;
    let (data, model) = match (data, model) {
        (Some(d), None) => (Some(PathBuf::from(d)), None),
        (None, Some(m)) => (None, Some(parse_model(&m)?)),
        _ => return Err(config_err("give exactly one of --data and --model")),
    };
    let rotate = if model.is_some() {
        r.with_default("rotate", a.rotate, false)?
    } else {
        false
    };
    let n = if model.is_some() {
        Some(r.required::<usize>("n", a.n)?)
    } else if r.optional::<usize>("n", a.n)?.is_some() {
        return Err(config_err("--n applies only to --model; the data file fixes n"));
    } else {
        None
    };
    let est = resolve_estimator(&mut r, &a.est)?;
    let needs_seed = model.is_some() || est.mode == EstimatorMode::Jackknife;
    let seed = if needs_seed {
        Some(r.required::<u64>("seed", a.est.seed)?)
    } else {
        r.optional::<u64>("seed", a.est.seed)?
    };
    let out = PathBuf::from(r.with_default("out", a.est.out.map(|p| p.display().to_string()), DEFAULT_OUT.into())?);
    let resolved = r.finish()?;

    let truth_model: Option<CovarianceModelF64> = match &model {
        Some(spec) => {
            let m = spec.build()?;
            Some(if rotate {
                m.with_random_basis(derive_seed(seed.unwrap_or(0), &[0xB]))?
            } else {
                m
            })
        }
        None => None,
    };
    let sample: SampleSetF64 = match (&data, &truth_model) {
        (Some(path), _) => SampleSetF64::from_csv_path(path)?,
        (None, Some(m)) => sample_gaussian(m, n.unwrap_or(0), seed.unwrap_or(0))?,
        (None, None) => unreachable!("one source is always present"),
    };
    let f = builtin(&est.f)?;
    let scheme = match est.mode {
        EstimatorMode::Plugin => AggregationScheme::plug_in(sample.n()),
        _ => make_scheme(est.m, sample.n(), est.q)?,
    };
    let value = match est.mode {
        EstimatorMode::Plugin => plugin_estimate(&f, &sample)?,
        EstimatorMode::Aggregate => aggregate_estimate(&f, &sample, &scheme)?,
        EstimatorMode::Jackknife => {
            let opts = JackknifeOptions::new(est.b, derive_seed(seed.unwrap_or(0), &[SUBSET_STREAM]));
            jackknife_estimate(&f, &sample, &scheme, &opts)?
        }
    };
    let hat_eigs = sym_eigvals(sample_covariance(&sample).view())?;
    let r_hat = effective_rank_of(&hat_eigs).ok();

    let mut metrics = vec![
        ("estimate".to_string(), value),
        ("n".to_string(), sample.n() as f64),
        ("d".to_string(), sample.dim() as f64),
        ("sum_abs_coeffs".to_string(), scheme.sum_abs_coeffs()),
    ];
    if let Some(rh) = r_hat {
        metrics.push(("effective_rank_hat".into(), rh));
    }
    let mut human = vec![
        format!("scheme sizes        : {:?}", scheme.sizes()),
        format!("sum |C_j|           : {}", scheme.sum_abs_coeffs()),
        match r_hat {
            Some(rh) => format!("effective rank (hat): {rh}"),
            None => "effective rank (hat): undefined (zero sample covariance)".into(),
        },
    ];
    if let Some(m) = &truth_model {
        let truth = spectra::tau_f(&f, m.eigenvalues());
        let budget = rate_budget(&f, m, sample.n(), scheme.m())?;
        metrics.push(("truth".into(), truth));
        metrics.push(("budget_main".into(), budget.main_term));
        metrics.push(("budget_linear_residual".into(), budget.linear_residual));
        metrics.push(("budget_bias".into(), budget.bias_term));
        human.push(format!("tau_f(Sigma)        : {truth}"));
        human.push(format!(
            "rate budget         : main {}, linear residual {}, bias {} (dominant: {})",
            budget.main_term,
            budget.linear_residual,
            budget.bias_term,
            budget.dominant()
        ));
    }

    println!(
        "estimate={value} f={} mode={} n={} d={}",
        f.name(),
        est.mode,
        sample.n(),
        sample.dim()
    );
    for line in &human {
        println!("{line}");
    }

    prepare_out(&out, &resolved)?;
    let hash = content_hash(&resolved);
    let rows: Vec<String> = metrics.iter().map(|(k, v)| format!("{k},{v}")).collect();
    write_csv_file(&out.join(format!("estimate_{hash}.csv")), "metric,value", &rows)?;
    Ok(())
}

pub fn coeffs(a: CoeffsArgs, config: Option<&Path>) -> CliResult<()> {
    let mut r = Resolver::new("coeffs", config)?;
    let m = r.required::<usize>("m", a.m)?;
    let n = r.required::<usize>("n", a.n)?;
    let q = r.with_default("q", a.q, 2.0)?;
    let out = PathBuf::from(r.with_default("out", a.out.map(|p| p.display().to_string()), DEFAULT_OUT.into())?);
    let resolved = r.finish()?;

    let scheme = make_scheme(m, n, q)?;
    let sizes: Vec<String> = scheme.sizes().iter().map(usize::to_string).collect();
    let coeffs: Vec<String> = scheme.coeffs().iter().map(f64::to_string).collect();
    println!("sizes={} coeffs={}", sizes.join(","), coeffs.join(","));
    println!("sum |C_j|          : {}", scheme.sum_abs_coeffs());
    println!("implied c = n/n_1  : {}", scheme.implied_c());
    println!("identity residual  : {:e}", scheme.identity_residual());

    prepare_out(&out, &resolved)?;
    let hash = content_hash(&resolved);
    let rows: Vec<String> = scheme
        .sizes()
        .iter()
        .zip(scheme.coeffs())
        .enumerate()
        .map(|(j, (s, c))| format!("{},{s},{c}", j + 1))
        .collect();
    write_csv_file(&out.join(format!("coeffs_{hash}.csv")), "level,size,coeff", &rows)?;
    Ok(())
}

struct Experiment {
    config: ExperimentConfig,
    out: PathBuf,
    resolved: Vec<(String, String)>,
}

fn resolve_experiment(
    mut r: Resolver,
    a: &ExperimentArgs,
    wants_list: bool,
    extra: impl FnOnce(&mut Resolver) -> CliResult<()>,
) -> CliResult<Experiment> {
    let model_text: String = r.required("model", a.model.clone())?;
    let model = parse_model(&model_text)?;
    let rotate = r.with_default("rotate", a.rotate, false)?;
    let est = resolve_estimator(&mut r, &a.est)?;
    let (n, n_list) = if wants_list {
        let flag = a.n_list.as_deref().map(str::parse::<SizeList>).transpose().map_err(config_err)?;
        let list: SizeList = r.required("n_list", flag)?;
        (list.0.iter().copied().max().unwrap_or(0), list.0)
    } else {
        (r.required::<usize>("n", a.n)?, Vec::new())
    };
    let reps = r.with_default("reps", a.reps, DEFAULT_REPS)?;
    if reps == 0 || reps > MAX_REPLICATES {
        return Err(config_err(format!("reps must be in 1..={MAX_REPLICATES}")));
    }
    let standardization: String = r.with_default("standardization", a.standardization.clone(), "oracle".into())?;
    let standardization: Standardization = standardization.parse()?;
    let seed = r.required::<u64>("seed", a.est.seed)?;
    let threads = r.optional::<usize>("threads", a.threads)?;
    if threads == Some(0) {
        return Err(config_err("threads must be positive"));
    }
    extra(&mut r)?;
    let out = PathBuf::from(r.with_default("out", a.est.out.as_ref().map(|p| p.display().to_string()), DEFAULT_OUT.into())?);
    let resolved = r.finish()?;

    let mut config = ExperimentConfig::new(model, &est.f, est.mode, n, reps, seed)
        .with_scheme(est.m, est.q)
        .with_subsets(est.b);
    config.rotate = rotate;
    config.n_list = n_list;
    config.standardization = standardization;
    config.threads = threads;
    Ok(Experiment {
        config,
        out,
        resolved,
    })
}

pub fn rates(a: ExperimentArgs, config: Option<&Path>) -> CliResult<()> {
    let r = Resolver::new("rates", config)?;
    let exp = resolve_experiment(r, &a, true, |_| Ok(()))?;
    let sweep = rate_sweep(&exp.config)?;
    for p in &sweep.points {
        println!("n={} rmse={} (se {}) bias={} (se {})", p.n, p.rmse, p.rmse_se, p.bias, p.bias_se);
    }
    println!("slope={} slope_se={}", sweep.slope, sweep.slope_se);
    prepare_out(&exp.out, &exp.resolved)?;
    for path in sweep.write_to_dir(&exp.out)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

pub fn normality(a: ExperimentArgs, config: Option<&Path>) -> CliResult<()> {
    let r = Resolver::new("normality", config)?;
    let exp = resolve_experiment(r, &a, false, |_| Ok(()))?;
    let (res, report) = normality_check(&exp.config)?;
    println!(
        "ks={} wasserstein1={} standardized_mean={} standardized_var={}",
        report.ks, report.wasserstein1, res.summary.standardized_mean, res.summary.standardized_var
    );
    prepare_out(&exp.out, &exp.resolved)?;
    let mut paths = res.write_to_dir(&exp.out)?;
    let qq = exp.out.join(format!("qq_{}.csv", exp.config.hash()));
    report.write_qq_csv(std::io::BufWriter::new(fs::File::create(&qq)?))?;
    paths.push(qq);
    for path in paths {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

pub fn supnorm(a: SupnormArgs, config: Option<&Path>) -> CliResult<()> {
    let r = Resolver::new("supnorm", config)?;
    let mut grid_path: Option<String> = None;
    let mut grid_size = DEFAULT_GRID_SIZE;
    let exp = resolve_experiment(r, &a.exp, false, |r| {
        grid_path = r.optional("grid", a.grid.as_ref().map(|p| p.display().to_string()))?;
        if grid_path.is_none() {
            grid_size = r.with_default("grid_size", a.grid_size, DEFAULT_GRID_SIZE)?;
        }
        Ok(())
    })?;
    let grid = match &grid_path {
        Some(p) => FunctionClassGrid::from_csv_reader(fs::File::open(p)?)?,
        None => default_grid(exp.config.m, grid_size, exp.config.seed)?,
    };
    let res = supnorm_experiment(&grid, &exp.config)?;
    for f in &res.functions {
        println!("{}: bias={} mean_abs={} rmse={}", f.name, f.bias, f.mean_abs, f.rmse);
    }
    println!("mean_max={} mean_max_se={}", res.mean_max, res.mean_max_se);
    prepare_out(&exp.out, &exp.resolved)?;
    grid.write_csv(std::io::BufWriter::new(fs::File::create(exp.out.join("grid.csv"))?))?;
    for path in res.write_to_dir(&exp.out, &grid)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

/// Smallest dimension and sample size accepted by `mp-compare`.
const MP_MIN_SIZE: usize = 50;
const MP_GRID_POINTS: usize = 201;

pub fn mp_compare(a: MpArgs, config: Option<&Path>) -> CliResult<()> {
    let mut r = Resolver::new("mp-compare", config)?;
    let d = r.required::<usize>("d", a.d)?;
    let n = r.required::<usize>("n", a.n)?;
    if d < MP_MIN_SIZE || n < MP_MIN_SIZE {
        return Err(config_err(format!("d and n must be at least {MP_MIN_SIZE}")));
    }
    let ratio = d as f64 / n as f64;
    let gamma = r.with_default("gamma", a.gamma, ratio)?;
    let seed = r.required::<u64>("seed", a.seed)?;
    let out = PathBuf::from(r.with_default("out", a.out.map(|p| p.display().to_string()), DEFAULT_OUT.into())?);
    let resolved = r.finish()?;
    if (gamma - ratio).abs() > 0.1 * ratio {
        eprintln!("warning: gamma={gamma} differs from d/n={ratio} by more than 10%");
    }

    let law = MarchenkoPasturF64::new(gamma)?;
    let model = CovarianceModelF64::identity(d)?;
    let mut eigs = sym_eigvals(sample_covariance(&sample_gaussian(&model, n, seed)?).view())?;
    let ks = esd_ks_distance(&eigs, &law);
    println!("ks={ks} gamma={gamma} d={d} n={n}");

    eigs.sort_by(f64::total_cmp);
    let (a_edge, b_edge) = law.support();
    let lo = a_edge.min(eigs[0]).min(0.0f64.max(a_edge - 0.1 * (b_edge - a_edge)));
    let hi = b_edge.max(eigs[eigs.len() - 1]) + 0.1 * (b_edge - a_edge);
    let rows: Vec<String> = (0..MP_GRID_POINTS)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (MP_GRID_POINTS - 1) as f64;
            format!("{x},{},{}", esd_cdf(&eigs, x), law.cdf(x))
        })
        .collect();
    prepare_out(&out, &resolved)?;
    let hash = content_hash(&resolved);
    write_csv_file(&out.join(format!("mp_compare_{hash}.csv")), "x,esd_cdf,mp_cdf", &rows)?;
    Ok(())
}

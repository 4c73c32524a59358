//! Estimators of `tau_f(Sigma)` and of the spectral measure `mu_Sigma`.
//!
//! * plug-in: `tau_f(hat Sigma_n)`;
//! * aggregate: `sum_j C_j tau_f(hat Sigma_{n_j})`, where `hat Sigma_{n_j}` uses
//!   the first `n_j` observations;
//! * jackknife: the same combination with every level averaged over random
//!   size-`n_j` subsets (an incomplete U-statistic standing in for the full
//!   symmetrization over all `C(n, n_j)` subsets).
//!
//! All three are also available as signed atomic measures whose integral
//! against `f` reproduces the scalar estimate.

mod bias_fit;
mod linearization;
mod measure;
pub mod scheme;

use rand::seq::index;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functionals::{tau_f, TestFunction};
use crate::linalg::{covariance_of_rows, sym_eigvals, SampleSet};
use crate::scalar::Scalar;
use crate::seed;

pub use bias_fit::{fit_bias_expansion, BiasCoefficient, BiasExpansion, BiasPoint};
pub use linearization::{linear_term, remainder_bound, taylor_remainder};
pub use measure::SignedSpectralMeasure;
pub use scheme::{
    closed_form_coefficients, make_scheme, solve_coefficient_system, AggregationScheme,
};

/// Default number of random subsets per jackknife level.
pub const DEFAULT_SUBSETS: usize = 50;

/// Default cap on eigendecompositions per jackknife estimate.
pub const DEFAULT_BUDGET: usize = 100_000;

/// How jackknife subsets are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsetSampler {
    /// Uniform size-`n_j` subsets without replacement.
    Uniform,
    /// Every subset is the prefix `1..=n_j`; the jackknife then collapses
    /// to the aggregate estimator.
    Prefix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JackknifeOptions {
    pub subsets_per_level: usize,
    pub seed: u64,
    pub sampler: SubsetSampler,
    /// Maximum number of eigendecompositions one estimate may use.
    pub budget: usize,
}

impl JackknifeOptions {
    pub fn new(subsets_per_level: usize, seed: u64) -> Self {
        Self {
            subsets_per_level,
            seed,
            sampler: SubsetSampler::Uniform,
            budget: DEFAULT_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureMode {
    Aggregate,
    Jackknife(JackknifeOptions),
}

/// Rows entering one plug-in evaluation.
enum Block {
    Prefix(usize),
    Rows(Vec<usize>),
}

struct Level {
    coeff: f64,
    blocks: Vec<Block>,
}

fn check_scheme<T: Scalar>(s: &SampleSet<T>, scheme: &AggregationScheme) -> Result<()> {
    if scheme.n() != s.n() {
        return Err(Error::SchemeMismatch {
            scheme_n: scheme.n(),
            sample_n: s.n(),
        });
    }
    Ok(())
}

fn aggregate_plan(scheme: &AggregationScheme) -> Vec<Level> {
    scheme
        .sizes()
        .iter()
        .zip(scheme.coeffs())
        .map(|(&nj, &c)| Level {
            coeff: c,
            blocks: vec![Block::Prefix(nj)],
        })
        .collect()
}

fn jackknife_plan(scheme: &AggregationScheme, opts: &JackknifeOptions) -> Result<Vec<Level>> {
    let b = opts.subsets_per_level;
    if b == 0 {
        return Err(Error::InvalidParameter("subsets_per_level must be >= 1".into()));
    }
    let n = scheme.n();
    let required: usize = scheme
        .sizes()
        .iter()
        .map(|&nj| if nj == n { 1 } else { b })
        .sum();
    if required > opts.budget {
        return Err(Error::BudgetExceeded {
            required,
            budget: opts.budget,
        });
    }
    Ok(scheme
        .sizes()
        .iter()
        .zip(scheme.coeffs())
        .enumerate()
        .map(|(j, (&nj, &c))| {
            let blocks = if nj == n {
                vec![Block::Prefix(n)]
            } else {
                (0..b)
                    .map(|k| match opts.sampler {
                        SubsetSampler::Prefix => Block::Prefix(nj),
                        SubsetSampler::Uniform => {
                            let mut rng = seed::rng_from(opts.seed, &[j as u64, k as u64]);
                            let mut idx = index::sample(&mut rng, n, nj).into_vec();
                            idx.sort_unstable();
                            Block::Rows(idx)
                        }
                    })
                    .collect()
            };
            Level { coeff: c, blocks }
        })
        .collect())
}

fn block_spectrum<T: Scalar>(s: &SampleSet<T>, block: &Block) -> Result<Vec<T>> {
    match block {
        Block::Prefix(k) => sym_eigvals(covariance_of_rows(s.prefix(*k)).view()),
        Block::Rows(idx) => sym_eigvals(covariance_of_rows(s.rows(idx).view()).view()),
    }
}

/// Plug-in value on one block. Linear functionals use the trace directly.
fn block_value<T: Scalar>(f: &TestFunction, s: &SampleSet<T>, block: &Block) -> Result<T> {
    if let Some(slope) = f.linear_slope() {
        let trace = |rows: ndarray::ArrayView2<'_, T>| -> T {
            let sq: T = rows.iter().map(|&x| x * x).sum();
            sq / T::from_count(rows.nrows())
        };
        let t = match block {
            Block::Prefix(k) => trace(s.prefix(*k)),
            Block::Rows(idx) => trace(s.rows(idx).view()),
        };
        return Ok(T::lit(slope) * t);
    }
    Ok(tau_f(f, &block_spectrum(s, block)?))
}

/// Mean computed as `v_0 + sum (v_i - v_0) / B`, exact when all values agree.
fn shifted_mean<T: Scalar>(values: &[T]) -> T {
    let first = values[0];
    let spread: T = values.iter().map(|&v| v - first).sum();
    first + spread / T::from_count(values.len())
}

fn combine<T: Scalar>(f: &TestFunction, s: &SampleSet<T>, plan: &[Level]) -> Result<T> {
    let mut total = T::zero();
    for level in plan {
        let values: Vec<T> = level
            .blocks
            .par_iter()
            .map(|b| block_value(f, s, b))
            .collect::<Result<_>>()?;
        total = total + T::lit(level.coeff) * shifted_mean(&values);
    }
    Ok(total)
}

/// `tau_f(hat Sigma_n)`.
pub fn plugin_estimate<T: Scalar>(f: &TestFunction, s: &SampleSet<T>) -> Result<T> {
    block_value(f, s, &Block::Prefix(s.n()))
}

/// `sum_j C_j tau_f(hat Sigma_{n_j})` on nested prefixes.
pub fn aggregate_estimate<T: Scalar>(
    f: &TestFunction,
    s: &SampleSet<T>,
    scheme: &AggregationScheme,
) -> Result<T> {
    check_scheme(s, scheme)?;
    combine(f, s, &aggregate_plan(scheme))
}

/// `sum_j C_j U_j` where `U_j` averages the plug-in over `B` random
/// size-`n_j` subsets (the full sample when `n_j = n`). Subset `k` of level
/// `j` is drawn from `hash(seed, j, k)`.
pub fn jackknife_estimate<T: Scalar>(
    f: &TestFunction,
    s: &SampleSet<T>,
    scheme: &AggregationScheme,
    opts: &JackknifeOptions,
) -> Result<T> {
    check_scheme(s, scheme)?;
    combine(f, s, &jackknife_plan(scheme, opts)?)
}

/// Signed measure `sum_j C_j mu_{hat Sigma_{n_j}}` (aggregate) or its
/// subset-averaged version (jackknife).
pub fn spectral_measure_estimate<T: Scalar>(
    s: &SampleSet<T>,
    scheme: &AggregationScheme,
    mode: &MeasureMode,
) -> Result<SignedSpectralMeasure<T>> {
    check_scheme(s, scheme)?;
    let plan = match mode {
        MeasureMode::Aggregate => aggregate_plan(scheme),
        MeasureMode::Jackknife(opts) => jackknife_plan(scheme, opts)?,
    };
    let mut atoms = Vec::new();
    for level in &plan {
        let weight = T::lit(level.coeff) / T::from_count(level.blocks.len());
        let spectra: Vec<Vec<T>> = level
            .blocks
            .par_iter()
            .map(|b| block_spectrum(s, b))
            .collect::<Result<_>>()?;
        for spectrum in spectra {
            atoms.extend(spectrum.into_iter().map(|x| (x, weight)));
        }
    }
    SignedSpectralMeasure::new(atoms)
}

//! Empirical bias expansion of the plug-in estimator,
//! `E tau_f(hat Sigma_n) - tau_f(Sigma) = sum_{l=1}^{L} b_l / n^l + o(n^{-L})`,
//! fitted by weighted least squares over several sample sizes.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functionals::{tau_f, TestFunction};
use crate::linalg::{sample_gaussian, solve_linear_system, CovarianceModel};
use crate::seed::derive_seed;

use super::plugin_estimate;

#[derive(Debug, Clone, PartialEq)]
pub struct BiasPoint {
    pub n: usize,
    pub bias: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasCoefficient {
    /// Power `l` of `1/n`.
    pub order: usize,
    pub value: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasExpansion {
    pub points: Vec<BiasPoint>,
    pub coefficients: Vec<BiasCoefficient>,
}

/// Monte Carlo plug-in bias at every `n` in `n_list` (`reps` replicates each,
/// replicate `i` at size `n` seeded by `hash(seed, n, i)`), then a fit of
/// `terms` coefficients without intercept, weighted by `1/se^2`.
pub fn fit_bias_expansion(
    f: &TestFunction,
    model: &CovarianceModel<f64>,
    n_list: &[usize],
    terms: usize,
    reps: usize,
    seed: u64,
) -> Result<BiasExpansion> {
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    if terms == 0 {
        return Err(Error::InvalidParameter("need at least one expansion term".into()));
    }
    if ns.len() < 3 || ns.len() < terms + 1 {
        return Err(Error::SingularDesign(format!(
            "{} distinct sample sizes cannot support {terms} term(s); need at least {}",
            ns.len(),
            (terms + 1).max(3)
        )));
    }
    if reps < 2 {
        return Err(Error::InvalidParameter("need at least two replicates".into()));
    }
    let truth = tau_f(f, model.eigenvalues());

    let mut points = Vec::with_capacity(ns.len());
    for &n in &ns {
        let errors: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|i| {
                let s = sample_gaussian(model, n, derive_seed(seed, &[n as u64, i as u64]))?;
                Ok(plugin_estimate(f, &s)? - truth)
            })
            .collect::<Result<_>>()?;
        let mean = errors.iter().sum::<f64>() / reps as f64;
        let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        points.push(BiasPoint {
            n,
            bias: mean,
            se: (var / reps as f64).sqrt(),
        });
    }

    // Regressors (n_ref / n)^l keep the normal equations well scaled.
    let n_ref = ns[0] as f64;
    let weighted = points.iter().all(|p| p.se > 0.0);
    let design: Vec<Vec<f64>> = points
        .iter()
        .map(|p| (1..=terms).map(|l| (n_ref / p.n as f64).powi(l as i32)).collect())
        .collect();
    let weights: Vec<f64> = points
        .iter()
        .map(|p| if weighted { 1.0 / (p.se * p.se) } else { 1.0 })
        .collect();

    let mut xtwx = vec![vec![0.0; terms]; terms];
    let mut xtwy = vec![0.0; terms];
    for ((row, w), p) in design.iter().zip(&weights).zip(&points) {
        for a in 0..terms {
            xtwy[a] += w * row[a] * p.bias;
            for b in 0..terms {
                xtwx[a][b] += w * row[a] * row[b];
            }
        }
    }
    let beta = solve_linear_system(xtwx.clone(), xtwy)?;

    // Coefficient covariance: (X^T W X)^{-1} when weights are 1/se^2,
    // otherwise the OLS sandwich with the per-point variances.
    let mut inv = vec![vec![0.0; terms]; terms];
    for k in 0..terms {
        let mut e = vec![0.0; terms];
        e[k] = 1.0;
        let col = solve_linear_system(xtwx.clone(), e)?;
        for (r, v) in col.into_iter().enumerate() {
            inv[r][k] = v;
        }
    }
    let variance = |k: usize| -> f64 {
        if weighted {
            inv[k][k]
        } else {
            design
                .iter()
                .zip(&points)
                .map(|(row, p)| {
                    let g: f64 = (0..terms).map(|b| inv[k][b] * row[b]).sum();
                    g * g * p.se * p.se
                })
                .sum()
        }
    };

    let coefficients = (0..terms)
        .map(|k| {
            let scale = n_ref.powi(k as i32 + 1);
            BiasCoefficient {
                order: k + 1,
                value: beta[k] * scale,
                se: variance(k).max(0.0).sqrt() * scale,
            }
        })
        .collect();
    Ok(BiasExpansion {
        points,
        coefficients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::builtin;

    #[test]
    fn design_needs_three_sizes() {
        let m = CovarianceModel::identity(2).unwrap();
        let f = builtin("square").unwrap();
        assert!(matches!(
            fit_bias_expansion(&f, &m, &[10, 20, 20], 1, 10, 0),
            Err(Error::SingularDesign(_))
        ));
        assert!(matches!(
            fit_bias_expansion(&f, &m, &[10, 20, 30], 3, 10, 0),
            Err(Error::SingularDesign(_))
        ));
    }
}

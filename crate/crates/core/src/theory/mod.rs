//! Closed-form reference quantities: effective ranks, the standard deviation
//! of the Gaussian limit, the three-term error budget, and the
//! Marchenko-Pastur law.

mod marchenko_pastur;
pub mod quadrature;

pub use marchenko_pastur::{esd_cdf, esd_ks_distance, MarchenkoPastur, CDF_TOLERANCE};

use crate::error::{Error, Result};
use crate::functionals::TestFunction;
use crate::linalg::CovarianceModel;
use crate::scalar::Scalar;

/// `r(Sigma) = tr(Sigma) / ||Sigma||`.
pub fn effective_rank<T: Scalar>(model: &CovarianceModel<T>) -> Result<T> {
    effective_rank_of(model.eigenvalues())
}

/// `r(Sigma^2) = tr(Sigma^2) / ||Sigma||^2`.
pub fn effective_rank_squared<T: Scalar>(model: &CovarianceModel<T>) -> Result<T> {
    let sq: Vec<T> = model.eigenvalues().iter().map(|&x| x * x).collect();
    effective_rank_of(&sq)
}

/// Effective rank of a non-negative spectrum given in any order.
pub fn effective_rank_of<T: Scalar>(eigenvalues: &[T]) -> Result<T> {
    let top = eigenvalues.iter().fold(T::zero(), |m, &x| m.max(x));
    if top <= T::zero() {
        return Err(Error::DegenerateSpectrum);
    }
    Ok(eigenvalues.iter().copied().sum::<T>() / top)
}

/// `||Sigma f'(Sigma)||_2 = sqrt(sum_k lambda_k^2 f'(lambda_k)^2)`; the limit
/// variance of `sqrt(n)(tau_f(hat Sigma_n) - tau_f(Sigma))` is twice its square.
pub fn gaussian_limit_std<T: Scalar>(f: &TestFunction, model: &CovarianceModel<T>) -> T {
    spectrum_limit_std(f, model.eigenvalues())
}

/// [`gaussian_limit_std`] for a bare spectrum (e.g. the data-driven version
/// evaluated at the eigenvalues of `hat Sigma_n`).
pub fn spectrum_limit_std<T: Scalar>(f: &TestFunction, eigenvalues: &[T]) -> T {
    eigenvalues
        .iter()
        .map(|&l| {
            let v = l * f.derivative(1, l);
            v * v
        })
        .sum::<T>()
        .sqrt()
}

/// The three terms of the error bound, constants dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBudget<T> {
    /// `||Sigma f'(Sigma)||_2 / sqrt(n)`.
    pub main_term: T,
    /// `r(Sigma) / n`.
    pub linear_residual: T,
    /// `r(Sigma) (sqrt(r(Sigma) / n))^{m+1}`.
    pub bias_term: T,
    pub total: T,
}

impl<T: Scalar> RateBudget<T> {
    /// Name of the largest term.
    pub fn dominant(&self) -> &'static str {
        if self.main_term >= self.linear_residual && self.main_term >= self.bias_term {
            "main"
        } else if self.linear_residual >= self.bias_term {
            "linear_residual"
        } else {
            "bias"
        }
    }
}

pub fn rate_budget<T: Scalar>(
    f: &TestFunction,
    model: &CovarianceModel<T>,
    n: usize,
    m: usize,
) -> Result<RateBudget<T>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if m < 1 {
        return Err(Error::InvalidParameter("m must be positive".into()));
    }
    let r = effective_rank(model)?;
    let nn = T::from_count(n);
    let main_term = gaussian_limit_std(f, model) / nn.sqrt();
    let linear_residual = r / nn;
    let bias_term = r * (r / nn).sqrt().powi(m as i32 + 1);
    Ok(RateBudget {
        main_term,
        linear_residual,
        bias_term,
        total: main_term + linear_residual + bias_term,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::builtin;

    #[test]
    fn effective_rank_examples() {
        let m = CovarianceModel::<f64>::identity(7).unwrap();
        assert_eq!(effective_rank(&m).unwrap(), 7.0);
        let m = CovarianceModel::<f64>::from_eigenvalues(vec![2.0, 1.0, 1.0]).unwrap();
        assert_eq!(effective_rank(&m).unwrap(), 2.0);
        assert_eq!(effective_rank_squared(&m).unwrap(), 1.5);
        let z = CovarianceModel::<f64>::from_eigenvalues(vec![0.0, 0.0]).unwrap();
        assert!(matches!(effective_rank(&z), Err(Error::DegenerateSpectrum)));
    }

    #[test]
    fn limit_std_examples() {
        let id = builtin("identity").unwrap();
        let m = CovarianceModel::<f64>::identity(9).unwrap();
        assert!((gaussian_limit_std(&id, &m) - 3.0).abs() < 1e-15);
        let m = CovarianceModel::<f64>::from_eigenvalues(vec![2.0, 1.0]).unwrap();
        let sq = builtin("square").unwrap();
        assert!((gaussian_limit_std(&sq, &m) - 68f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn budget_examples() {
        let id = builtin("identity").unwrap();
        let m = CovarianceModel::<f64>::identity(20).unwrap();
        let b = rate_budget(&id, &m, 2000, 3).unwrap();
        assert!((b.main_term - 0.1).abs() < 1e-15);
        assert!((b.linear_residual - 0.01).abs() < 1e-15);
        assert!((b.bias_term - 0.002).abs() < 1e-15);
        assert!((b.total - 0.112).abs() < 1e-14);
        assert_eq!(b.dominant(), "main");

        let b = rate_budget(&id, &m, 20, 2).unwrap();
        assert!((b.bias_term - 20.0).abs() < 1e-12);
    }
}

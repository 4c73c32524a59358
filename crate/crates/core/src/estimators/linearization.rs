//! First-order expansion of `tau_f` around the true covariance:
//! `tau_f(Sigma + H) = tau_f(Sigma) + <f'(Sigma), H> + R_f(Sigma; H)`.
//!
//! These need the ground truth and are diagnostics, not estimators.

use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::functionals::{tau_f, TestFunction};
use crate::linalg::{frobenius_norm, sym_eigvals, CovarianceModel};
use crate::scalar::Scalar;

fn check_dim<T: Scalar>(model: &CovarianceModel<T>, sigma_hat: ArrayView2<'_, T>) -> Result<()> {
    let d = model.dim();
    if sigma_hat.dim() != (d, d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: sigma_hat.nrows(),
        });
    }
    Ok(())
}

/// `<f'(Sigma), hat Sigma - Sigma> = sum_k f'(lambda_k) v_k^T (hat Sigma - Sigma) v_k`.
pub fn linear_term<T: Scalar>(
    f: &TestFunction,
    model: &CovarianceModel<T>,
    sigma_hat: ArrayView2<'_, T>,
) -> Result<T> {
    check_dim(model, sigma_hat)?;
    let lambda = model.eigenvalues();
    let diag_of_hat: Vec<T> = match model.basis() {
        None => (0..model.dim()).map(|k| sigma_hat[[k, k]]).collect(),
        Some(v) => {
            let hv = sigma_hat.dot(v);
            (0..model.dim())
                .map(|k| v.column(k).dot(&hv.column(k)))
                .collect()
        }
    };
    Ok(lambda
        .iter()
        .zip(&diag_of_hat)
        .map(|(&l, &h)| f.derivative(1, l) * (h - l))
        .sum())
}

/// `R_f(Sigma; H) = tau_f(hat Sigma) - tau_f(Sigma) - <f'(Sigma), H>`, `H = hat Sigma - Sigma`.
pub fn taylor_remainder<T: Scalar>(
    f: &TestFunction,
    model: &CovarianceModel<T>,
    sigma_hat: ArrayView2<'_, T>,
) -> Result<T> {
    let lin = linear_term(f, model, sigma_hat)?;
    let hat = tau_f(f, &sym_eigvals(sigma_hat)?);
    Ok(hat - tau_f(f, model.eigenvalues()) - lin)
}

/// `||f'||_Lip / 2 * ||H||_2^2`, with the Lipschitz constant of `f'` taken on
/// `[0, max(||Sigma||, ||hat Sigma||)]`.
pub fn remainder_bound<T: Scalar>(
    f: &TestFunction,
    model: &CovarianceModel<T>,
    sigma_hat: ArrayView2<'_, T>,
) -> Result<T> {
    check_dim(model, sigma_hat)?;
    let h = &sigma_hat - &model.matrix();
    let top_hat = sym_eigvals(sigma_hat)?.first().copied().unwrap_or(T::zero());
    let upper = model.eigenvalues()[0].max(top_hat).as_f64();
    let hs = frobenius_norm(h.view());
    Ok(T::lit(f.lipschitz_derivative(upper) * 0.5) * hs * hs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::builtin;
    use crate::linalg::{sample_covariance, sample_gaussian};
    use ndarray::array;

    #[test]
    fn vanishes_at_truth() {
        let m = CovarianceModel::<f64>::from_eigenvalues(vec![3.0, 1.0])
            .unwrap()
            .with_random_basis(1)
            .unwrap();
        let sigma = m.matrix();
        let f = builtin("log1p").unwrap();
        assert!(linear_term(&f, &m, sigma.view()).unwrap().abs() < 1e-14);
        assert!(taylor_remainder(&f, &m, sigma.view()).unwrap().abs() < 1e-13);
    }

    #[test]
    fn diagonal_square_case() {
        let m = CovarianceModel::<f64>::from_eigenvalues(vec![2.0, 0.5]).unwrap();
        let hat = array![[2.25, 0.0], [0.0, 0.25]];
        let lin = linear_term(&builtin("square").unwrap(), &m, hat.view()).unwrap();
        assert!((lin - (2.0 * 2.0 * 0.25 + 2.0 * 0.5 * -0.25)).abs() < 1e-15);
    }

    #[test]
    fn identity_is_exactly_linear() {
        let m = CovarianceModel::<f64>::from_eigenvalues(vec![1.5, 1.0, 0.2])
            .unwrap()
            .with_random_basis(3)
            .unwrap();
        let hat = sample_covariance(&sample_gaussian(&m, 7, 2).unwrap());
        let f = builtin("identity").unwrap();
        let tr_hat: f64 = hat.diag().sum();
        assert!((linear_term(&f, &m, hat.view()).unwrap() - (tr_hat - 2.7)).abs() < 1e-13);
        assert!(taylor_remainder(&f, &m, hat.view()).unwrap().abs() < 1e-13);
    }

    #[test]
    fn dimension_checked() {
        let m = CovarianceModel::<f64>::identity(3).unwrap();
        let hat = array![[1.0, 0.0], [0.0, 1.0]];
        assert!(linear_term(&builtin("square").unwrap(), &m, hat.view()).is_err());
    }
}

//! Sample-size schedules and aggregation coefficients.
//!
//! For sizes `n_1 < ... < n_m` the coefficients solve
//!
//! ```text
//! sum_j C_j = 1,    sum_j C_j / n_j^l = 0   (l = 1..m-1)
//! ```
//!
//! whose solution is `C_j = prod_{i != j} n_j / (n_j - n_i)`. Both routes are
//! generic over the number type so they can be checked against each other in
//! exact rational arithmetic as well as in floating point.

use num_traits::{FromPrimitive, Num, Signed};

use crate::error::{Error, Result};
use crate::linalg::solve_linear_system;

/// Smallest admissible subsample size.
pub const MIN_SUBSAMPLE: usize = 2;

/// Tolerance for `|sum C_j - 1|` and the normalized moment conditions.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;

/// Closed form vs. linear solve, relative to `max |C_j|`.
pub const CROSS_CHECK_TOLERANCE: f64 = 1e-8;

/// `C_j = prod_{i != j} n_j / (n_j - n_i)`.
pub fn closed_form_coefficients<T>(sizes: &[usize]) -> Vec<T>
where
    T: Num + Clone + FromPrimitive,
{
    let conv = |n: usize| T::from_usize(n).expect("size representable");
    sizes
        .iter()
        .enumerate()
        .map(|(j, &nj)| {
            sizes
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .fold(T::one(), |acc, (_, &ni)| {
                    let num = conv(nj);
                    let den = conv(nj) - conv(ni);
                    acc * (num / den)
                })
        })
        .collect()
}

/// Solves the defining system directly. Row `l` is scaled by `n_max^l`, i.e.
/// the unknowns multiply `(n_max / n_j)^l`, which keeps the floating-point
/// system well conditioned; the solution is unchanged.
pub fn solve_coefficient_system<T>(sizes: &[usize]) -> Result<Vec<T>>
where
    T: Num + Signed + PartialOrd + Clone + FromPrimitive,
{
    let m = sizes.len();
    let conv = |n: usize| T::from_usize(n).expect("size representable");
    let n_max = sizes.iter().copied().max().unwrap_or(1);
    let ratios: Vec<T> = sizes.iter().map(|&nj| conv(n_max) / conv(nj)).collect();
    let mut rows = Vec::with_capacity(m);
    let mut power = vec![T::one(); m];
    for _l in 0..m {
        rows.push(power.clone());
        for (p, r) in power.iter_mut().zip(&ratios) {
            *p = p.clone() * r.clone();
        }
    }
    let mut rhs = vec![T::zero(); m];
    if m > 0 {
        rhs[0] = T::one();
    }
    solve_linear_system(rows, rhs)
}

/// Sizes `n_1 < ... < n_m = n` with coefficients `C_1..C_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationScheme {
    sizes: Vec<usize>,
    coeffs: Vec<f64>,
    q: f64,
}

impl AggregationScheme {
    /// The one-level scheme `sizes = (n)`, `coeffs = (1)`: plain plug-in.
    pub fn plug_in(n: usize) -> Self {
        Self {
            sizes: vec![n],
            coeffs: vec![1.0],
            q: f64::NAN,
        }
    }

    /// Scheme on explicit, strictly increasing sizes.
    pub fn from_sizes(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidParameter("no sample sizes given".into()));
        }
        if sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "sample sizes must be strictly increasing: {sizes:?}"
            )));
        }
        if sizes[0] == 0 {
            return Err(Error::InvalidParameter("sample sizes must be positive".into()));
        }
        let coeffs = closed_form_coefficients::<f64>(&sizes);
        let scheme = Self {
            sizes,
            coeffs,
            q: f64::NAN,
        };
        scheme.verify()?;
        Ok(scheme)
    }

    pub fn m(&self) -> usize {
        self.sizes.len()
    }

    /// Full sample size `n_m`.
    pub fn n(&self) -> usize {
        *self.sizes.last().expect("non-empty")
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Schedule ratio, `NaN` for schemes built from explicit sizes.
    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn sum_abs_coeffs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    /// The constant `c = n / n_1` with `n / c <= n_1`.
    pub fn implied_c(&self) -> f64 {
        self.n() as f64 / self.sizes[0] as f64
    }

    /// Largest normalized violation of the defining identities:
    /// `|sum C_j - 1|` and `|sum C_j / n_j^l| / max_j |C_j / n_j^l|`.
    pub fn identity_residual(&self) -> f64 {
        let n = self.n() as f64;
        let mut worst = (self.coeffs.iter().sum::<f64>() - 1.0).abs();
        for l in 1..self.m() {
            let terms: Vec<f64> = self
                .sizes
                .iter()
                .zip(&self.coeffs)
                .map(|(&nj, &c)| c * (n / nj as f64).powi(l as i32))
                .collect();
            let scale = terms.iter().fold(0.0f64, |a, t| a.max(t.abs()));
            let total: f64 = terms.iter().sum();
            if scale > 0.0 {
                worst = worst.max(total.abs() / scale);
            }
        }
        worst
    }

    /// Checks the identities and cross-checks the closed form against a
    /// direct solve of the linear system.
    pub fn verify(&self) -> Result<()> {
        let resid = self.identity_residual();
        if !(resid <= IDENTITY_TOLERANCE) {
            return Err(Error::CoefficientCheck(format!(
                "identity residual {resid:e} exceeds {IDENTITY_TOLERANCE:e}"
            )));
        }
        let solved = solve_coefficient_system::<f64>(&self.sizes)?;
        let scale = self.coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let diff = self
            .coeffs
            .iter()
            .zip(&solved)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        if !(diff <= CROSS_CHECK_TOLERANCE * scale) {
            return Err(Error::CoefficientCheck(format!(
                "closed form and linear solve differ by {diff:e} (max |C| = {scale:e})"
            )));
        }
        Ok(())
    }
}

/// Geometric schedule `n_j = round(q^{j-m} n)`, `n_m = n`.
pub fn make_scheme(m: usize, n: usize, q: f64) -> Result<AggregationScheme> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "aggregation needs m >= 2, got {m}"
        )));
    }
    if !(q.is_finite() && q > 1.0) {
        return Err(Error::InvalidParameter(format!("schedule ratio q must exceed 1, got {q}")));
    }
    if (n as f64) < q.powi(m as i32 - 1) * MIN_SUBSAMPLE as f64 {
        let sizes = (1..=m)
            .map(|j| (q.powi(j as i32 - m as i32) * n as f64).round() as usize)
            .collect();
        return Err(Error::SizeCollision { m, n, q, sizes });
    }
    let sizes: Vec<usize> = (1..=m)
        .map(|j| {
            if j == m {
                n
            } else {
                (q.powi(j as i32 - m as i32) * n as f64).round() as usize
            }
        })
        .collect();
    if sizes[0] < MIN_SUBSAMPLE || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::SizeCollision { m, n, q, sizes });
    }
    let mut scheme = AggregationScheme::from_sizes(sizes)?;
    scheme.q = q;
    Ok(scheme)
}

//! Marchenko-Pastur law `nu_gamma`: the limit of the eigenvalue distribution
//! of `hat Sigma_n` for `Sigma = I_d`, `d/n -> gamma`.
//!
//! Continuous part `sqrt((x-a)(b-x)) / (2 pi gamma x)` on `[a, b]` with
//! `a = (1 - sqrt gamma)^2`, `b = (1 + sqrt gamma)^2`, plus an atom of mass
//! `1 - 1/gamma` at zero when `gamma > 1`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::quadrature::adaptive_simpson;

/// Local tolerance handed to the quadrature.
pub const CDF_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarchenkoPastur<T> {
    gamma: T,
}

impl<T: Scalar> MarchenkoPastur<T> {
    pub fn new(gamma: T) -> Result<Self> {
        if !(gamma.is_finite() && gamma > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "Marchenko-Pastur ratio must be positive, got {gamma}"
            )));
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    /// `(a, b)`.
    pub fn support(&self) -> (T, T) {
        let r = self.gamma.sqrt();
        let one = T::one();
        ((one - r) * (one - r), (one + r) * (one + r))
    }

    /// Mass of the atom at zero.
    pub fn atom(&self) -> T {
        if self.gamma > T::one() {
            T::one() - self.gamma.recip()
        } else {
            T::zero()
        }
    }

    /// Density of the continuous part (infinite at `x = 0` when `gamma = 1`).
    pub fn density(&self, x: T) -> T {
        let (a, b) = self.support();
        if x < a || x > b {
            return T::zero();
        }
        if x == T::zero() {
            return T::infinity();
        }
        let prod = ((x - a) * (b - x)).max(T::zero());
        prod.sqrt() / (T::lit(2.0) * T::PI() * self.gamma * x)
    }

    /// `nu_gamma([0, x])`, atom included.
    pub fn cdf(&self, x: T) -> T {
        if x < T::zero() {
            return T::zero();
        }
        let (a, b) = self.support();
        let atom = self.atom();
        if x <= a {
            return atom;
        }
        let width = b - a;
        let mid = (a + b) * T::lit(0.5);
        let norm = T::lit(2.0) * T::PI() * self.gamma;
        let tol = T::lit(CDF_TOLERANCE);

        // y = a + t^2 on [a, mid]: integrand 2 t^2 sqrt(b - a - t^2) / (norm (a + t^2))
        let left = |t: T| -> T {
            let t2 = t * t;
            let ratio = if a + t2 == T::zero() { T::one() } else { t2 / (a + t2) };
            T::lit(2.0) * ratio * (width - t2).max(T::zero()).sqrt() / norm
        };
        // y = b - t^2 on [mid, b]: integrand 2 t^2 sqrt(b - a - t^2) / (norm (b - t^2))
        let right = |t: T| -> T {
            let t2 = t * t;
            T::lit(2.0) * t2 * (width - t2).max(T::zero()).sqrt() / (norm * (b - t2))
        };

        let upto = x.min(b);
        let continuous = if upto <= mid {
            adaptive_simpson(&left, T::zero(), (upto - a).sqrt(), tol)
        } else {
            adaptive_simpson(&left, T::zero(), (mid - a).sqrt(), tol)
                + adaptive_simpson(&right, (b - upto).max(T::zero()).sqrt(), (b - mid).sqrt(), tol)
        };
        (atom + continuous).min(T::one())
    }

    /// `nu_gamma([0, x))`.
    fn cdf_left(&self, x: T) -> T {
        if x <= T::zero() {
            T::zero()
        } else {
            self.cdf(x)
        }
    }
}

/// Kolmogorov-Smirnov distance between the normalized empirical spectral
/// distribution `d^{-1} sum_k delta_{lambda_k}` and `nu_gamma`.
pub fn esd_ks_distance<T: Scalar>(eigenvalues: &[T], law: &MarchenkoPastur<T>) -> T {
    let mut sorted: Vec<T> = eigenvalues.to_vec();
    sorted.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    let d = T::from_count(sorted.len().max(1));
    let mut ks = T::zero();
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let below = T::from_count(i) / d;
        let upto = T::from_count(j) / d;
        ks = ks
            .max((upto - law.cdf(x)).abs())
            .max((below - law.cdf_left(x)).abs());
        i = j;
    }
    ks
}

/// Empirical spectral cdf evaluated at `x`.
pub fn esd_cdf<T: Scalar>(sorted_eigenvalues: &[T], x: T) -> T {
    let k = sorted_eigenvalues.partition_point(|&v| v <= x);
    T::from_count(k) / T::from_count(sorted_eigenvalues.len().max(1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_examples() {
        let mp = MarchenkoPastur::new(1.0f64).unwrap();
        assert_eq!(mp.support(), (0.0, 4.0));
        assert_eq!(mp.density(4.0), 0.0);
        let mp = MarchenkoPastur::new(0.25f64).unwrap();
        let (a, b) = mp.support();
        assert!((a - 0.25).abs() < 1e-15 && (b - 2.25).abs() < 1e-15);
        assert!(MarchenkoPastur::new(0.0f64).is_err());
    }

    #[test]
    fn total_mass_is_one() {
        for g in [0.1, 0.5, 1.0, 2.0, 0.0005, 7.0] {
            let mp = MarchenkoPastur::<f64>::new(g).unwrap();
            let (_, b) = mp.support();
            assert!((mp.cdf(b) - 1.0).abs() <= 1e-6, "gamma={g}: {}", mp.cdf(b));
            assert_eq!(mp.cdf(b + 1.0), mp.cdf(b));
        }
    }

    #[test]
    fn cdf_monotone_and_has_atom() {
        let mp = MarchenkoPastur::new(2.0f64).unwrap();
        assert!((mp.cdf(0.0) - 0.5).abs() < 1e-15);
        assert_eq!(mp.cdf(-1.0), 0.0);
        let mut prev = 0.0;
        for i in 0..=300 {
            let x = 6.0 * i as f64 / 300.0;
            let c = mp.cdf(x);
            assert!(c + 1e-12 >= prev);
            assert!(mp.density(x) >= 0.0);
            prev = c;
        }
    }

    #[test]
    fn ks_of_quantiles_is_small() {
        // Exact quantiles of the law, found by bisection on the cdf.
        let mp = MarchenkoPastur::new(0.5f64).unwrap();
        let (a, b) = mp.support();
        let d = 400;
        let eigs: Vec<f64> = (0..d)
            .map(|i| {
                let p = (i as f64 + 0.5) / d as f64;
                let (mut lo, mut hi) = (a, b);
                for _ in 0..60 {
                    let m = 0.5 * (lo + hi);
                    if mp.cdf(m) < p {
                        lo = m;
                    } else {
                        hi = m;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect();
        let ks = esd_ks_distance(&eigs, &mp);
        assert!(ks <= 0.5 / d as f64 + 1e-6, "ks={ks}");
    }
}

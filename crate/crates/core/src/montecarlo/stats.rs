//! Sample statistics and distances to the standard normal.

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};

fn std_normal() -> Normal {
    Normal::standard()
}

pub fn normal_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

/// `Phi^{-1}(p)`, polished with one Newton step on `Phi`.
pub fn normal_quantile(p: f64) -> f64 {
    let n = std_normal();
    let x = n.inverse_cdf(p);
    if !x.is_finite() {
        return x;
    }
    let density = n.pdf(x);
    if density > 0.0 {
        x - (n.cdf(x) - p) / density
    } else {
        x
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// `sup_x |F_R(x) - Phi(x)|`.
pub fn ks_normal(xs: &[f64]) -> f64 {
    let v = sorted(xs);
    let r = v.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j < v.len() && v[j] == v[i] {
            j += 1;
        }
        let phi = normal_cdf(v[i]);
        d = d.max((j as f64 / r - phi).abs()).max((phi - i as f64 / r).abs());
        i = j;
    }
    d
}

/// `R^{-1} sum_i |x_(i) - Phi^{-1}((i - 1/2)/R)|`.
pub fn wasserstein1_normal(xs: &[f64]) -> f64 {
    let v = sorted(xs);
    let r = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, x)| (x - normal_quantile((i as f64 + 0.5) / r)).abs())
        .sum::<f64>()
        / r
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalityReport {
    pub ks: f64,
    pub wasserstein1: f64,
    /// `(Phi^{-1}((i - 1/2)/R), x_(i))`.
    pub qq: Vec<(f64, f64)>,
}

impl NormalityReport {
    pub fn from_sample(xs: &[f64]) -> Result<Self> {
        if xs.is_empty() || xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "normality check needs a non-empty finite sample".into(),
            ));
        }
        let v = sorted(xs);
        let r = v.len() as f64;
        let qq = v
            .iter()
            .enumerate()
            .map(|(i, &x)| (normal_quantile((i as f64 + 0.5) / r), x))
            .collect();
        Ok(Self {
            ks: ks_normal(xs),
            wasserstein1: wasserstein1_normal(xs),
            qq,
        })
    }

    pub fn write_qq_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "theoretical,sample")?;
        for (t, s) in &self.qq {
            writeln!(out, "{t},{s}")?;
        }
        Ok(())
    }
}

/// Ordinary least squares `y = a + b x`; returns `(b, se(b), a)`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let k = x.len();
    if k != y.len() || k < 3 {
        return Err(Error::SingularDesign(format!(
            "slope fit needs at least three points, got {k}"
        )));
    }
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::SingularDesign("all regressor values coincide".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let se = (rss / (k - 2) as f64 / sxx).sqrt();
    Ok((slope, se, intercept))
}

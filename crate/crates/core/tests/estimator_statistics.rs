//! Monte Carlo checks of the estimators against analytic Gaussian moments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use spectra::montecarlo::stats::{mean, sample_variance};
use spectra::{
    builtin, fit_bias_expansion, jackknife_estimate, make_scheme, plugin_estimate, run,
    sample_gaussian, CovarianceModelF64, EstimatorMode, ExperimentConfig, JackknifeOptions,
    ModelSpec,
};

/// `E tr(hat Sigma_n^2) - tr(Sigma^2)` for centred Gaussian data.
fn square_bias(eigs: &[f64], n: usize) -> f64 {
    let tr: f64 = eigs.iter().sum();
    let tr2: f64 = eigs.iter().map(|l| l * l).sum();
    (tr2 + tr * tr) / n as f64
}

/// Plain-loop Monte Carlo of `tr(hat Sigma_n^2)` with its own generator.
fn brute_force_square_bias(eigs: &[f64], n: usize, reps: usize, seed: u64) -> (f64, f64) {
    let d = eigs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth: f64 = eigs.iter().map(|l| l * l).sum();
    let errs: Vec<f64> = (0..reps)
        .map(|_| {
            let x: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    eigs.iter()
                        .map(|l| l.sqrt() * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                        .collect()
                })
                .collect();
            let mut tr2 = 0.0;
            for a in 0..d {
                for b in 0..d {
                    let s: f64 = x.iter().map(|row| row[a] * row[b]).sum::<f64>() / n as f64;
                    tr2 += s * s;
                }
            }
            tr2 - truth
        })
        .collect();
    (mean(&errs), (sample_variance(&errs) / reps as f64).sqrt())
}

#[test]
fn square_bias_formula_matches_brute_force() {
    for (eigs, n) in [(vec![1.0, 1.0, 1.0], 10), (vec![2.0, 1.0, 0.5], 10), (vec![1.0, 0.5], 50)] {
        let (b, se) = brute_force_square_bias(&eigs, n, 40_000, 5);
        let want = square_bias(&eigs, n);
        assert!((b - want).abs() <= 3.0 * se, "{eigs:?} n={n}: {b} vs {want} (se {se})");
    }
}

#[test]
fn plugin_log_determinant_proxy_is_accurate() {
    let f = builtin("log1p").unwrap();
    let model = CovarianceModelF64::identity(10).unwrap();
    let want = 10.0 * 2f64.ln();
    for seed in 0..3 {
        let s = sample_gaussian(&model, 5000, seed).unwrap();
        let v = plugin_estimate(&f, &s).unwrap();
        assert!((v - want).abs() <= 0.2, "seed {seed}: {v}");
    }
}

fn experiment(
    dim: usize,
    f: &str,
    mode: EstimatorMode,
    n: usize,
    reps: usize,
    seed: u64,
) -> ExperimentConfig {
    ExperimentConfig::new(ModelSpec::Identity { dim }, f, mode, n, reps, seed)
}

#[test]
fn identity_functional_is_unbiased_in_every_mode() {
    for mode in [EstimatorMode::Plugin, EstimatorMode::Aggregate, EstimatorMode::Jackknife] {
        let cfg = experiment(6, "identity", mode, 60, 2000, 4).with_scheme(3, 2.0);
        let res = run(&cfg).unwrap();
        let s = &res.summary;
        assert!(s.bias.abs() <= 3.0 * s.bias_se, "{mode}: {} (se {})", s.bias, s.bias_se);
    }
}

#[test]
fn two_level_scheme_removes_square_bias() {
    let d = 5;
    let n = 20;
    let plug = run(&experiment(d, "square", EstimatorMode::Plugin, n, 4000, 9)).unwrap();
    let agg = run(&experiment(d, "square", EstimatorMode::Aggregate, n, 4000, 9)).unwrap();
    let want = square_bias(&vec![1.0; d], n);
    let p = &plug.summary;
    assert!((p.bias - want).abs() <= 3.0 * p.bias_se, "{} vs {want}", p.bias);
    let a = &agg.summary;
    assert!(a.bias.abs() <= 3.0 * a.bias_se, "{} (se {})", a.bias, a.bias_se);
    // The bias reduction is visible well beyond Monte Carlo noise.
    assert!(p.bias.abs() - a.bias.abs() >= 3.0 * (p.bias_se + a.bias_se));
}

#[test]
fn more_subsets_do_not_increase_variance() {
    let f = builtin("log1p").unwrap();
    let model = CovarianceModelF64::identity(10).unwrap();
    let scheme = make_scheme(2, 200, 2.0).unwrap();
    let spread = |b: usize| {
        let vals: Vec<f64> = (0..2000u64)
            .map(|i| {
                let s = sample_gaussian(&model, 200, i).unwrap();
                jackknife_estimate(&f, &s, &scheme, &JackknifeOptions::new(b, i + 1_000_000)).unwrap()
            })
            .collect();
        sample_variance(&vals)
    };
    let v1 = spread(1);
    let v50 = spread(50);
    assert!(v50 <= v1, "B=50: {v50}, B=1: {v1}");
}

#[test]
fn fitted_square_bias_matches_moment_formula() {
    let d = 4;
    let f = builtin("square").unwrap();
    let model = CovarianceModelF64::identity(d).unwrap();
    let fit = fit_bias_expansion(&f, &model, &[25, 50, 100, 200], 2, 3000, 12).unwrap();
    let b1 = &fit.coefficients[0];
    let want = (d + d * d) as f64;
    assert!((b1.value - want).abs() <= 3.0 * b1.se, "{} vs {want} (se {})", b1.value, b1.se);
    let b2 = &fit.coefficients[1];
    assert!(b2.value.abs() <= 3.0 * b2.se, "{} (se {})", b2.value, b2.se);
}

#[test]
fn fitted_identity_bias_vanishes() {
    let f = builtin("identity").unwrap();
    let model = CovarianceModelF64::poly_decay(5, 1.0).unwrap();
    let fit = fit_bias_expansion(&f, &model, &[20, 40, 80, 160], 2, 2000, 3).unwrap();
    for c in &fit.coefficients {
        assert!(c.value.abs() <= 3.0 * c.se, "order {}: {} (se {})", c.order, c.value, c.se);
    }
}

#[test]
fn fitted_log1p_bias_is_negative() {
    let f = builtin("log1p").unwrap();
    let model = CovarianceModelF64::identity(5).unwrap();
    let fit = fit_bias_expansion(&f, &model, &[250, 500, 1000, 2000], 1, 10_000, 8).unwrap();
    let b1 = &fit.coefficients[0];
    eprintln!("log1p, I_5: b1 = {} (se {})", b1.value, b1.se);
    assert!(b1.value < 0.0);
}

use ndarray::Array2;
use proptest::prelude::*;

use spectra::estimators::{linear_term, remainder_bound, taylor_remainder};
use spectra::linalg::{frobenius_norm, sym_eig};
use spectra::theory::{effective_rank_of, effective_rank_squared, MarchenkoPastur};
use spectra::{
    aggregate_estimate, builtin, effective_rank, gaussian_limit_std, jackknife_estimate,
    make_scheme, plugin_estimate, sample_covariance, sample_gaussian, spectral_measure_estimate,
    sym_eigvals, tau_f, AggregationScheme, CovarianceModelF64, JackknifeOptions, MeasureMode,
    SampleSet, SubsetSampler, TestFunction,
};

const SMOOTH: [&str; 5] = ["square", "log1p", "rational", "sine", "bump"];

fn spectrum(max_dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..5.0, 1..=max_dim)
}

fn positive_spectrum(max_dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..5.0, 1..=max_dim)
}

fn named(i: usize) -> TestFunction {
    builtin(SMOOTH[i % SMOOTH.len()]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_functional_is_linear(
        eigs in spectrum(12),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        i in 0usize..5,
        j in 0usize..5,
    ) {
        let f = named(i);
        let g = named(j);
        let combo = TestFunction::linear_combination(&[(a, &f), (b, &g)]);
        let lhs = tau_f(&combo, &eigs);
        let rhs = a * tau_f(&f, &eigs) + b * tau_f(&g, &eigs);
        let scale = (a * tau_f(&f, &eigs)).abs() + (b * tau_f(&g, &eigs)).abs();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn trace_functional_ignores_basis(eigs in spectrum(10), seed in any::<u64>(), i in 0usize..5) {
        let f = named(i);
        let model = CovarianceModelF64::from_eigenvalues(eigs.clone()).unwrap();
        let rotated = model.clone().with_random_basis(seed).unwrap();
        let recovered = sym_eigvals(rotated.matrix().view()).unwrap();
        let want = tau_f(&f, model.eigenvalues());
        prop_assert!((tau_f(&f, &recovered) - want).abs() <= 1e-8 * (1.0 + want.abs()));
    }

    #[test]
    fn eigendecomposition_round_trip_is_stable(eigs in spectrum(10), seed in any::<u64>()) {
        let a = CovarianceModelF64::from_eigenvalues(eigs).unwrap()
            .with_random_basis(seed).unwrap()
            .matrix();
        let first = sym_eig(a.view()).unwrap();
        let second = sym_eig(first.reconstruct().view()).unwrap();
        for (x, y) in first.eigenvalues.iter().zip(second.eigenvalues.iter()) {
            prop_assert!((x - y).abs() <= 1e-8);
        }
    }

    #[test]
    fn sample_covariance_is_psd_with_bounded_rank(
        eigs in positive_spectrum(9),
        n in 1usize..15,
        seed in any::<u64>(),
    ) {
        let d = eigs.len();
        let model = CovarianceModelF64::from_eigenvalues(eigs).unwrap();
        let s = sample_gaussian(&model, n, seed).unwrap();
        let lam = sym_eigvals(sample_covariance(&s).view()).unwrap();
        prop_assert!(lam.iter().all(|&x| x >= 0.0));
        let tol = 1e-9 * lam[0].max(1.0);
        let rank = lam.iter().filter(|&&x| x > tol).count();
        prop_assert!(rank <= n.min(d));
    }

    #[test]
    fn remainder_obeys_quadratic_bound(
        eigs in positive_spectrum(6),
        n in 2usize..40,
        seed in any::<u64>(),
        i in 0usize..5,
    ) {
        let f = named(i);
        let model = CovarianceModelF64::from_eigenvalues(eigs).unwrap().with_random_basis(seed).unwrap();
        let hat = sample_covariance(&sample_gaussian(&model, n, seed ^ 1).unwrap());
        let r = taylor_remainder(&f, &model, hat.view()).unwrap();
        let bound = remainder_bound(&f, &model, hat.view()).unwrap();
        prop_assert!(r.abs() <= bound * (1.0 + 1e-9) + 1e-12, "|R|={} bound={}", r.abs(), bound);
    }

    #[test]
    fn square_remainder_is_frobenius_norm(eigs in positive_spectrum(6), n in 2usize..30, seed in any::<u64>()) {
        let f = builtin("square").unwrap();
        let model = CovarianceModelF64::from_eigenvalues(eigs).unwrap().with_random_basis(seed).unwrap();
        let hat = sample_covariance(&sample_gaussian(&model, n, seed ^ 2).unwrap());
        let h: Array2<f64> = &hat - &model.matrix();
        let hs = frobenius_norm(h.view());
        let r = taylor_remainder(&f, &model, hat.view()).unwrap();
        prop_assert!((r - hs * hs).abs() <= 1e-10 * (hs * hs).max(1e-300) + 1e-12);
        let lin = linear_term(&f, &model, hat.view()).unwrap();
        let direct: f64 = (model.matrix().dot(&h)).diag().sum() * 2.0;
        prop_assert!((lin - direct).abs() <= 1e-10 * (1.0 + direct.abs()));
    }

    #[test]
    fn measure_integrates_to_scalar_estimator(
        d in 1usize..8,
        m in 2usize..4,
        n in 24usize..80,
        b in 1usize..6,
        seed in any::<u64>(),
        i in 0usize..5,
    ) {
        let f = named(i);
        let model = CovarianceModelF64::poly_decay(d, 0.7).unwrap();
        let s = sample_gaussian(&model, n, seed).unwrap();
        let scheme = make_scheme(m, n, 1.5).unwrap();
        let agg = aggregate_estimate(&f, &s, &scheme).unwrap();
        let mu = spectral_measure_estimate(&s, &scheme, &MeasureMode::Aggregate).unwrap();
        prop_assert!((mu.integrate(&f) - agg).abs() <= 1e-10 * (1.0 + agg.abs()));

        let opts = JackknifeOptions::new(b, seed ^ 3);
        let jk = jackknife_estimate(&f, &s, &scheme, &opts).unwrap();
        let mu = spectral_measure_estimate(&s, &scheme, &MeasureMode::Jackknife(opts)).unwrap();
        prop_assert!((mu.integrate(&f) - jk).abs() <= 1e-10 * (1.0 + jk.abs()));
    }

    #[test]
    fn prefix_jackknife_is_aggregate(n in 20usize..60, seed in any::<u64>(), i in 0usize..5) {
        let f = named(i);
        let model = CovarianceModelF64::identity(4).unwrap();
        let s = sample_gaussian(&model, n, seed).unwrap();
        let scheme = make_scheme(2, n, 2.0).unwrap();
        let mut opts = JackknifeOptions::new(1, seed);
        opts.sampler = SubsetSampler::Prefix;
        prop_assert_eq!(
            jackknife_estimate(&f, &s, &scheme, &opts).unwrap(),
            aggregate_estimate(&f, &s, &scheme).unwrap()
        );
    }

    #[test]
    fn single_level_aggregate_is_plugin(n in 1usize..40, seed in any::<u64>(), i in 0usize..5) {
        let f = named(i);
        let s = sample_gaussian(&CovarianceModelF64::identity(3).unwrap(), n, seed).unwrap();
        prop_assert_eq!(
            aggregate_estimate(&f, &s, &AggregationScheme::plug_in(n)).unwrap(),
            plugin_estimate(&f, &s).unwrap()
        );
    }

    #[test]
    fn identical_rows_make_jackknife_agree(
        row in prop::collection::vec(-3.0f64..3.0, 1..6),
        n in 8usize..40,
        seed in any::<u64>(),
    ) {
        let d = row.len();
        let data = Array2::from_shape_fn((n, d), |(_, k)| row[k]);
        let s = SampleSet::new(data).unwrap();
        let f = builtin("log1p").unwrap();
        let scheme = make_scheme(2, n, 2.0).unwrap();
        let jk = jackknife_estimate(&f, &s, &scheme, &JackknifeOptions::new(7, seed)).unwrap();
        prop_assert_eq!(jk, aggregate_estimate(&f, &s, &scheme).unwrap());
    }

    #[test]
    fn effective_rank_is_scale_free_and_bounded(eigs in spectrum(15), c in 0.01f64..100.0) {
        prop_assume!(eigs.iter().any(|&x| x > 0.0));
        let model = CovarianceModelF64::from_eigenvalues(eigs.clone()).unwrap();
        let r = effective_rank(&model).unwrap();
        let rc = effective_rank(&model.scaled(c).unwrap()).unwrap();
        prop_assert!((r - rc).abs() <= 1e-12 * r);
        let rank = eigs.iter().filter(|&&x| x > 0.0).count() as f64;
        prop_assert!(r >= 1.0 - 1e-12 && r <= rank + 1e-12 && rank <= eigs.len() as f64);
        let r2 = effective_rank_squared(&model).unwrap();
        prop_assert!(r2 >= 1.0 - 1e-12 && r2 <= r + 1e-12);
        prop_assert!((effective_rank_of(&eigs).unwrap() - r).abs() <= 1e-12 * r);
    }

    #[test]
    fn identity_limit_std_scales_linearly(eigs in positive_spectrum(10), c in 0.01f64..100.0) {
        let f = builtin("identity").unwrap();
        let model = CovarianceModelF64::from_eigenvalues(eigs).unwrap();
        let base = gaussian_limit_std(&f, &model);
        let scaled = gaussian_limit_std(&f, &model.scaled(c).unwrap());
        prop_assert!((scaled - c * base).abs() <= 1e-12 * c * base);
    }

    #[test]
    fn marchenko_pastur_density_and_cdf_are_sane(gamma in 0.05f64..4.0, xs in prop::collection::vec(-1.0f64..10.0, 2..12)) {
        let mp = MarchenkoPastur::<f64>::new(gamma).unwrap();
        let mut xs = xs;
        xs.sort_by(f64::total_cmp);
        let mut last = 0.0;
        for &x in &xs {
            prop_assert!(mp.density(x) >= 0.0);
            let c = mp.cdf(x);
            prop_assert!(c >= last - 1e-9 && c <= 1.0 + 1e-6);
            last = c;
        }
    }
}

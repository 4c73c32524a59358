use ndarray::Array2;

use spectra::linalg::operator_norm;
use spectra::{sample_covariance, sample_gaussian, sym_eig, CovarianceModelF64};

#[test]
fn identity_coordinates_have_unit_variance() {
    let model = CovarianceModelF64::identity(2).unwrap();
    let s = sample_gaussian(&model, 100_000, 17).unwrap();
    let c = sample_covariance(&s);
    for k in 0..2 {
        assert!((c[[k, k]] - 1.0).abs() <= 0.02, "coordinate {k}: {}", c[[k, k]]);
    }
    assert!(c[[0, 1]].abs() <= 0.02);
}

#[test]
fn diagonal_model_is_recovered() {
    let model = CovarianceModelF64::from_eigenvalues(vec![4.0, 1.0]).unwrap();
    let c = sample_covariance(&sample_gaussian(&model, 100_000, 3).unwrap());
    assert!((c[[0, 0]] - 4.0).abs() <= 0.1);
    assert!((c[[1, 1]] - 1.0).abs() <= 0.1);
}

#[test]
fn operator_norm_error_is_small_at_ten_thousand() {
    let model = CovarianceModelF64::from_eigenvalues(vec![2.0, 1.0]).unwrap();
    for seed in 0..5 {
        let c = sample_covariance(&sample_gaussian(&model, 10_000, seed).unwrap());
        let err = operator_norm((&c - &model.matrix()).view()).unwrap();
        assert!(err <= 0.15, "seed {seed}: {err}");
    }
}

#[test]
fn rotated_model_has_requested_covariance() {
    let model = CovarianceModelF64::from_eigenvalues(vec![3.0, 1.0, 0.25])
        .unwrap()
        .with_random_basis(8)
        .unwrap();
    let c = sample_covariance(&sample_gaussian(&model, 200_000, 4).unwrap());
    let err = operator_norm((&c - &model.matrix()).view()).unwrap();
    assert!(err <= 0.05, "{err}");
}

#[test]
fn wishart_reconstruction_is_tight() {
    let model = CovarianceModelF64::identity(8).unwrap();
    let s = sample_gaussian(&model, 8, 21).unwrap();
    let x = s.data();
    let a: Array2<f64> = x.t().dot(&x);
    let dec = sym_eig(a.view()).unwrap();
    let resid = (&dec.reconstruct() - &a).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let norm = operator_norm(a.view()).unwrap();
    assert!(resid <= 1e-8 * (1.0 + norm), "{resid}");
}

#[test]
fn sampling_is_independent_of_thread_count() {
    let model = CovarianceModelF64::poly_decay(6, 1.0).unwrap().with_random_basis(2).unwrap();
    let draw = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sample_gaussian(&model, 500, 99).unwrap())
    };
    let one = draw(1);
    assert_eq!(one, draw(4));
    assert_eq!(one, sample_gaussian(&model, 500, 99).unwrap());
    assert_ne!(one, sample_gaussian(&model, 500, 100).unwrap());
}

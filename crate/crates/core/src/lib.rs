//! Estimation of spectral trace functionals `tau_f(Sigma) = tr f(Sigma)` of a
//! covariance matrix from i.i.d. samples, with bias-reduced aggregate and
//! jackknife estimators, reference theory, and a Monte Carlo harness.
//!
//! The numerical core is generic over the scalar type (`f32` or `f64`);
//! aggregation coefficients can also be computed in exact rational
//! arithmetic. The `*F64` / `*F32` aliases below name the common
//! instantiations.

pub mod error;
pub mod estimators;
pub mod functionals;
pub mod linalg;
pub mod montecarlo;
pub mod scalar;
pub mod seed;
pub mod theory;

pub use error::{Error, Result};
pub use estimators::{
    aggregate_estimate, fit_bias_expansion, jackknife_estimate, make_scheme, plugin_estimate,
    spectral_measure_estimate, AggregationScheme, JackknifeOptions, MeasureMode,
    SignedSpectralMeasure, SubsetSampler,
};
pub use functionals::{builtin, default_grid, tau_f, FunctionClassGrid, TestFunction};
pub use linalg::{sample_covariance, sample_gaussian, sym_eig, sym_eigvals, CovarianceModel, SampleSet};
pub use montecarlo::{
    normality_check, rate_sweep, run, supnorm_experiment, EstimatorMode, ExperimentConfig,
    ExperimentResult, ModelSpec, Standardization,
};
pub use scalar::Scalar;
pub use theory::{effective_rank, gaussian_limit_std, rate_budget, MarchenkoPastur, RateBudget};

pub type CovarianceModelF64 = CovarianceModel<f64>;
pub type CovarianceModelF32 = CovarianceModel<f32>;
pub type SampleSetF64 = SampleSet<f64>;
pub type SampleSetF32 = SampleSet<f32>;
pub type SignedSpectralMeasureF64 = SignedSpectralMeasure<f64>;
pub type SignedSpectralMeasureF32 = SignedSpectralMeasure<f32>;
pub type MarchenkoPasturF64 = MarchenkoPastur<f64>;
pub type MarchenkoPasturF32 = MarchenkoPastur<f32>;
pub type RateBudgetF64 = RateBudget<f64>;

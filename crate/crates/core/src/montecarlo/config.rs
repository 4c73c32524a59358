use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimators::DEFAULT_SUBSETS;
use crate::linalg::CovarianceModel;
use crate::seed::derive_seed;

/// Eigenvalue profile of the ground-truth covariance.
///
/// Text forms: `identity:<d>`, `poly:<d>,<beta>` (`lambda_k = k^{-beta}`),
/// `custom:<l1>,<l2>,...`.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Identity { dim: usize },
    PolyDecay { dim: usize, beta: f64 },
    Custom(Vec<f64>),
}

impl ModelSpec {
    pub fn dim(&self) -> usize {
        match self {
            ModelSpec::Identity { dim } | ModelSpec::PolyDecay { dim, .. } => *dim,
            ModelSpec::Custom(v) => v.len(),
        }
    }

    pub fn build(&self) -> Result<CovarianceModel<f64>> {
        match self {
            ModelSpec::Identity { dim } => CovarianceModel::identity(*dim),
            ModelSpec::PolyDecay { dim, beta } => CovarianceModel::poly_decay(*dim, *beta),
            ModelSpec::Custom(v) => CovarianceModel::from_eigenvalues(v.clone()),
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad model spec `{s}`"));
        let (kind, args) = s.trim().split_once(':').ok_or_else(bad)?;
        let parts: Vec<&str> = args.split(',').map(str::trim).collect();
        match kind.trim() {
            "identity" => match parts.as_slice() {
                [d] => Ok(ModelSpec::Identity {
                    dim: d.parse().map_err(|_| bad())?,
                }),
                _ => Err(bad()),
            },
            "poly" => match parts.as_slice() {
                [d, b] => Ok(ModelSpec::PolyDecay {
                    dim: d.parse().map_err(|_| bad())?,
                    beta: b.parse().map_err(|_| bad())?,
                }),
                _ => Err(bad()),
            },
            "custom" => parts
                .iter()
                .map(|p| p.parse::<f64>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()
                .map(ModelSpec::Custom),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Identity { dim } => write!(f, "identity:{dim}"),
            ModelSpec::PolyDecay { dim, beta } => write!(f, "poly:{dim},{beta}"),
            ModelSpec::Custom(v) => {
                write!(f, "custom:")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorMode {
    Plugin,
    Aggregate,
    Jackknife,
}

impl FromStr for EstimatorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "plugin" => Ok(Self::Plugin),
            "aggregate" => Ok(Self::Aggregate),
            "jackknife" => Ok(Self::Jackknife),
            other => Err(Error::InvalidParameter(format!(
                "unknown estimator mode `{other}` (plugin | aggregate | jackknife)"
            ))),
        }
    }
}

impl fmt::Display for EstimatorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Plugin => "plugin",
            Self::Aggregate => "aggregate",
            Self::Jackknife => "jackknife",
        })
    }
}

/// Scale used for the standardized statistic
/// `sqrt(n) (estimate - tau_f(Sigma)) / (sqrt 2 * scale)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Standardization {
    /// `||Sigma f'(Sigma)||_2` from the known covariance.
    Oracle,
    /// `||hat Sigma_n f'(hat Sigma_n)||_2` from the data.
    PlugIn,
}

impl FromStr for Standardization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "oracle" => Ok(Self::Oracle),
            "plugin" => Ok(Self::PlugIn),
            other => Err(Error::InvalidParameter(format!(
                "unknown standardization `{other}` (oracle | plugin)"
            ))),
        }
    }
}

impl fmt::Display for Standardization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Oracle => "oracle",
            Self::PlugIn => "plugin",
        })
    }
}

/// Replicates stored per experiment are capped at this many rows.
pub const MAX_REPLICATES: usize = 100_000;

const BASIS_TAG: u64 = 0xB;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    /// Attach a random orthonormal basis (seeded from `seed`).
    pub rotate: bool,
    pub function: String,
    pub mode: EstimatorMode,
    pub m: usize,
    pub q: f64,
    /// Jackknife subsets per level.
    pub subsets: usize,
    pub n: usize,
    /// Sample sizes for rate sweeps; ignored by single-size runs.
    pub n_list: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub standardization: Standardization,
    /// Worker threads; `None` uses the ambient rayon pool. Never affects results.
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(model: ModelSpec, function: &str, mode: EstimatorMode, n: usize, reps: usize, seed: u64) -> Self {
        Self {
            model,
            rotate: false,
            function: function.to_string(),
            mode,
            m: 2,
            q: 2.0,
            subsets: DEFAULT_SUBSETS,
            n,
            n_list: Vec::new(),
            reps,
            seed,
            standardization: Standardization::Oracle,
            threads: None,
        }
    }

    pub fn with_scheme(mut self, m: usize, q: f64) -> Self {
        self.m = m;
        self.q = q;
        self
    }

    pub fn with_subsets(mut self, b: usize) -> Self {
        self.subsets = b;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    pub fn build_model(&self) -> Result<CovarianceModel<f64>> {
        let model = self.model.build()?;
        if self.rotate {
            model.with_random_basis(derive_seed(self.seed, &[BASIS_TAG]))
        } else {
            Ok(model)
        }
    }

    /// Every key that influences results, in a fixed order.
    pub fn key_values(&self) -> Vec<(&'static str, String)> {
        let list = self
            .n_list
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(",");
        vec![
            ("model", self.model.to_string()),
            ("rotate", self.rotate.to_string()),
            ("f", self.function.clone()),
            ("mode", self.mode.to_string()),
            ("m", self.m.to_string()),
            ("q", self.q.to_string()),
            ("B", self.subsets.to_string()),
            ("n", self.n.to_string()),
            ("n_list", list),
            ("reps", self.reps.to_string()),
            ("seed", self.seed.to_string()),
            ("standardization", self.standardization.to_string()),
        ]
    }

    /// Hex digest of [`Self::key_values`] (thread count excluded).
    pub fn hash(&self) -> String {
        hash_text(&self.canonical_text())
    }

    pub fn canonical_text(&self) -> String {
        self.key_values()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}

/// First 16 hex digits of SHA-256.
pub fn hash_text(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

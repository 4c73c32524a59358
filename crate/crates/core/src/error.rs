use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not symmetric: max |a_ij - a_ji| = {asymmetry:e}")]
    NotSymmetric { asymmetry: f64 },

    #[error(
        "symmetric eigensolver did not converge: eigenvalue {index} still unsettled \
         after {iterations} QL iterations (off-diagonal {residual:e})"
    )]
    EigenNotConverged {
        index: usize,
        iterations: usize,
        residual: f64,
    },

    #[error(
        "sample sizes collide or fall below 2 after rounding (m={m}, n={n}, q={q}): {sizes:?}; \
         use a larger n or a smaller q"
    )]
    SizeCollision {
        m: usize,
        n: usize,
        q: f64,
        sizes: Vec<usize>,
    },

    #[error("aggregation coefficients failed verification: {0}")]
    CoefficientCheck(String),

    #[error("scheme is built for n={scheme_n} but the sample has n={sample_n}")]
    SchemeMismatch { scheme_n: usize, sample_n: usize },

    #[error("jackknife needs {required} eigendecompositions, budget is {budget}")]
    BudgetExceeded { required: usize, budget: usize },

    #[error("unknown test function `{0}`")]
    UnknownFunction(String),

    #[error("spectrum has no positive eigenvalue")]
    DegenerateSpectrum,

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("replicate {index} failed: {source}")]
    Replicate {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NotSymmetric { .. }
            | Error::EigenNotConverged { .. }
            | Error::SizeCollision { .. }
            | Error::CoefficientCheck(_)
            | Error::BudgetExceeded { .. }
            | Error::DegenerateSpectrum
            | Error::SingularDesign(_) => true,
            Error::Replicate { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

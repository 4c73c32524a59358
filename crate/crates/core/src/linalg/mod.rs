//! Dense symmetric linear algebra and Gaussian sampling.
//!
//! Ground-truth covariances are described by their spectrum plus an optional
//! orthonormal basis. Samples are stored row-wise (row `i` is observation
//! `X_i`), and the sample covariance is the uncentered `n^{-1} sum X_i X_i^T`
//! since the observations are mean zero.

mod eigen;
mod solve;

use std::io::Read;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

pub use eigen::{
    sym_eig, sym_eigvals, SpectralDecomposition, CLIP_RELATIVE, SYMMETRY_TOLERANCE,
};
pub use solve::solve_linear_system;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed;

/// Tolerance for `basis^T basis = I`, max absolute entry.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-10;

/// Ground-truth covariance `Sigma = V diag(lambda) V^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel<T> {
    eigenvalues: Vec<T>,
    basis: Option<Array2<T>>,
}

impl<T: Scalar> CovarianceModel<T> {
    /// Diagonal model. Eigenvalues are sorted into non-increasing order.
    pub fn from_eigenvalues(mut eigenvalues: Vec<T>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if let Some(bad) = eigenvalues.iter().find(|x| !x.is_finite() || **x < T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "eigenvalues must be finite and non-negative, got {bad}"
            )));
        }
        eigenvalues.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        Ok(Self {
            eigenvalues,
            basis: None,
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::from_eigenvalues(vec![T::one(); dim])
    }

    /// `lambda_k = k^{-beta}`, `k = 1..=dim`.
    pub fn poly_decay(dim: usize, beta: f64) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::InvalidParameter(format!("decay exponent {beta}")));
        }
        Self::from_eigenvalues((1..=dim).map(|k| T::lit((k as f64).powf(-beta))).collect())
    }

    /// Attaches an explicit basis. Columns are eigenvectors in the order of
    /// the (sorted) eigenvalues.
    pub fn with_basis(mut self, basis: Array2<T>) -> Result<Self> {
        let d = self.dim();
        if basis.dim() != (d, d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: basis.nrows(),
            });
        }
        let gram = basis.t().dot(&basis);
        let dev = gram
            .indexed_iter()
            .map(|((i, j), &x)| (x - if i == j { T::one() } else { T::zero() }).abs())
            .fold(T::zero(), T::max);
        if dev > T::lit(ORTHONORMAL_TOLERANCE) {
            return Err(Error::InvalidParameter(format!(
                "basis is not orthonormal (max |B^T B - I| = {dev:e})"
            )));
        }
        self.basis = Some(basis);
        Ok(self)
    }

    /// Attaches a Haar-like random basis drawn from `seed`.
    pub fn with_random_basis(self, seed: u64) -> Result<Self> {
        let d = self.dim();
        let basis = random_orthonormal(d, seed);
        self.with_basis(basis)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn basis(&self) -> Option<&Array2<T>> {
        self.basis.as_ref()
    }

    /// The basis, materializing the identity when none is attached.
    pub fn basis_or_identity(&self) -> Array2<T> {
        self.basis
            .clone()
            .unwrap_or_else(|| Array2::eye(self.dim()))
    }

    /// Returns a copy with every eigenvalue multiplied by `c > 0`.
    pub fn scaled(&self, c: T) -> Result<Self> {
        let mut out = Self::from_eigenvalues(self.eigenvalues.iter().map(|&x| x * c).collect())?;
        out.basis = self.basis.clone();
        Ok(out)
    }

    /// Dense `Sigma`.
    pub fn matrix(&self) -> Array2<T> {
        let lambda = Array1::from(self.eigenvalues.clone());
        match &self.basis {
            None => Array2::from_diag(&lambda),
            Some(v) => {
                let scaled = v * &lambda.view().insert_axis(Axis(0));
                symmetrize(scaled.dot(&v.t()))
            }
        }
    }
}

/// `n` observations in `dim` coordinates, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet<T> {
    data: Array2<T>,
}

impl<T: Scalar> SampleSet<T> {
    pub fn new(data: Array2<T>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidParameter(
                "a sample needs at least one observation and one coordinate".into(),
            ));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("sample contains non-finite entries".into()));
        }
        Ok(Self { data })
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> ArrayView2<'_, T> {
        self.data.view()
    }

    /// First `k` observations.
    pub fn prefix(&self, k: usize) -> ArrayView2<'_, T> {
        self.data.slice(ndarray::s![..k, ..])
    }

    /// Copies the listed rows.
    pub fn rows(&self, idx: &[usize]) -> Array2<T> {
        self.data.select(Axis(0), idx)
    }

    /// Reads observations from CSV: one row per observation, decimal floats,
    /// header row optional (detected by a non-numeric first record).
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut rows: Vec<Vec<T>> = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.iter().all(|f| f.is_empty()) {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                rec.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(vals) => rows.push(vals.into_iter().map(T::lit).collect()),
                Err(_) if line == 0 && rows.is_empty() => continue,
                Err(e) => {
                    return Err(Error::Parse(format!("record {}: {e}", line + 1)));
                }
            }
        }
        let d = rows.first().map(Vec::len).unwrap_or(0);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(Error::Parse(format!(
                "observation {} has {} columns, expected {d}",
                i + 1,
                r.len()
            )));
        }
        let n = rows.len();
        let data = Array2::from_shape_vec((n, d), rows.into_iter().flatten().collect())
            .map_err(|e| Error::Parse(e.to_string()))?;
        Self::new(data)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }
}

/// Draws `n` i.i.d. `N(0, Sigma)` rows as `X = V diag(sqrt(lambda)) Z`.
pub fn sample_gaussian<T: Scalar>(
    model: &CovarianceModel<T>,
    n: usize,
    seed: u64,
) -> Result<SampleSet<T>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let d = model.dim();
    let mut rng = seed::rng_from(seed, &[]);
    let roots: Vec<T> = model.eigenvalues().iter().map(|x| x.sqrt()).collect();
    let mut z = Array2::<T>::zeros((n, d));
    for mut row in z.rows_mut() {
        for (k, x) in row.iter_mut().enumerate() {
            let g: f64 = rng.sample(StandardNormal);
            *x = T::lit(g) * roots[k];
        }
    }
    let data = match model.basis() {
        None => z,
        Some(v) => z.dot(&v.t()),
    };
    SampleSet::new(data)
}

/// `n^{-1} sum_i X_i X_i^T`, symmetrized.
pub fn sample_covariance<T: Scalar>(s: &SampleSet<T>) -> Array2<T> {
    covariance_of_rows(s.data())
}

/// Sample covariance of an arbitrary block of observations (rows).
pub fn covariance_of_rows<T: Scalar>(rows: ArrayView2<'_, T>) -> Array2<T> {
    let n = T::from_count(rows.nrows().max(1));
    let gram = rows.t().dot(&rows);
    symmetrize(gram.mapv(|x| x / n))
}

/// `(A + A^T) / 2`.
pub fn symmetrize<T: Scalar>(a: Array2<T>) -> Array2<T> {
    let half = T::lit(0.5);
    let at = a.t().to_owned();
    (a + at).mapv(|x| x * half)
}

/// Orthonormal `d x d` matrix from the QR factorization of a Gaussian matrix
/// (Gram-Schmidt with one reorthogonalization pass, signs fixed so `R` has a
/// positive diagonal).
pub fn random_orthonormal<T: Scalar>(d: usize, seed: u64) -> Array2<T> {
    let mut rng = seed::rng_from(seed, &[0x6261_7369_73]);
    let mut q = Array2::<T>::zeros((d, d));
    for x in q.iter_mut() {
        let g: f64 = rng.sample(StandardNormal);
        *x = T::lit(g);
    }
    for j in 0..d {
        for _pass in 0..2 {
            for k in 0..j {
                let proj: T = (0..d).map(|i| q[[i, k]] * q[[i, j]]).sum();
                for i in 0..d {
                    let qik = q[[i, k]];
                    q[[i, j]] = q[[i, j]] - proj * qik;
                }
            }
        }
        let norm = (0..d).map(|i| q[[i, j]] * q[[i, j]]).sum::<T>().sqrt();
        for i in 0..d {
            q[[i, j]] = q[[i, j]] / norm;
        }
    }
    q
}

/// Operator (spectral) norm of a symmetric matrix.
pub fn operator_norm<T: Scalar>(a: ArrayView2<'_, T>) -> Result<T> {
    let ev = sym_eigvals(a)?;
    Ok(ev.iter().fold(T::zero(), |m, &x| m.max(x.abs())))
}

/// Frobenius norm.
pub fn frobenius_norm<T: Scalar>(a: ArrayView2<'_, T>) -> T {
    a.iter().map(|&x| x * x).sum::<T>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_model_gives_zero_sample() {
        let m = CovarianceModel::<f64>::from_eigenvalues(vec![0.0; 3]).unwrap();
        let s = sample_gaussian(&m, 5, 1).unwrap();
        assert_eq!(s.n(), 5);
        assert!(s.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn outer_products() {
        let s = SampleSet::new(array![[1.0, 2.0]]).unwrap();
        assert_eq!(sample_covariance(&s), array![[1.0, 2.0], [2.0, 4.0]]);
        let s = SampleSet::new(array![[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(sample_covariance(&s), array![[0.5, 0.0], [0.0, 0.5]]);
    }

    #[test]
    fn eigenvalues_sorted_and_validated() {
        let m = CovarianceModel::<f64>::from_eigenvalues(vec![1.0, 4.0, 2.0]).unwrap();
        assert_eq!(m.eigenvalues(), &[4.0, 2.0, 1.0]);
        assert!(CovarianceModel::<f64>::from_eigenvalues(vec![1.0, -0.5]).is_err());
        assert!(CovarianceModel::<f64>::from_eigenvalues(vec![]).is_err());
    }

    #[test]
    fn random_basis_is_orthonormal() {
        for d in [1, 3, 17, 60] {
            let m = CovarianceModel::<f64>::identity(d)
                .unwrap()
                .with_random_basis(9)
                .unwrap();
            let v = m.basis().unwrap();
            let dev = (v.t().dot(v) - Array2::<f64>::eye(d))
                .iter()
                .fold(0.0f64, |a, &x| a.max(x.abs()));
            assert!(dev < ORTHONORMAL_TOLERANCE, "d={d} dev={dev}");
        }
    }

    #[test]
    fn non_orthonormal_basis_rejected() {
        let m = CovarianceModel::<f64>::identity(2).unwrap();
        assert!(m.with_basis(array![[1.0, 0.1], [0.0, 1.0]]).is_err());
    }

    #[test]
    fn model_matrix_has_model_spectrum() {
        let m = CovarianceModel::<f64>::from_eigenvalues(vec![3.0, 2.0, 0.5])
            .unwrap()
            .with_random_basis(4)
            .unwrap();
        let ev = sym_eigvals(m.matrix().view()).unwrap();
        for (a, b) in ev.iter().zip(m.eigenvalues()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_with_and_without_header() {
        let s = SampleSet::<f64>::from_csv_reader("x,y\n1,2\n3.5,-4\n".as_bytes()).unwrap();
        assert_eq!(s.data(), array![[1.0, 2.0], [3.5, -4.0]]);
        let s = SampleSet::<f64>::from_csv_reader("1,2\n3,4\n\n".as_bytes()).unwrap();
        assert_eq!(s.n(), 2);
        assert!(SampleSet::<f64>::from_csv_reader("1,2\n3\n".as_bytes()).is_err());
        assert!(SampleSet::<f64>::from_csv_reader("1,2\n3,abc\n".as_bytes()).is_err());
        assert!(SampleSet::<f64>::from_csv_reader("a,b\n".as_bytes()).is_err());
    }

    #[test]
    fn same_seed_same_bits() {
        let m = CovarianceModel::<f64>::from_eigenvalues(vec![2.0, 1.0])
            .unwrap()
            .with_random_basis(3)
            .unwrap();
        let a = sample_gaussian(&m, 50, 77).unwrap();
        let b = sample_gaussian(&m, 50, 77).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_gaussian(&m, 50, 78).unwrap());
    }
}

//! Symmetric eigendecomposition.
//!
//! Householder reduction to tridiagonal form followed by the implicit QL
//! algorithm with Wilkinson-type shifts (the classic `tred2`/`tql2` pair).
//! Eigenvalues are returned in descending order; eigenvalues in
//! `(-clip_eps, 0)` with `clip_eps = 1e-10 * ||A||` are replaced by zero.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative clipping threshold for spurious negative eigenvalues.
pub const CLIP_RELATIVE: f64 = 1e-10;

/// Maximum asymmetry accepted by [`sym_eig`], relative to `1 + max|a_ij|`.
pub const SYMMETRY_TOLERANCE: f64 = 1e-8;

const MAX_QL_ITERATIONS: usize = 60;

#[derive(Debug, Clone)]
pub struct SpectralDecomposition<T> {
    /// Sorted non-increasing.
    pub eigenvalues: Array1<T>,
    /// Column `k` is the unit eigenvector of `eigenvalues[k]`.
    pub eigenvectors: Array2<T>,
}

impl<T: Scalar> SpectralDecomposition<T> {
    /// `V diag(lambda) V^T`.
    pub fn reconstruct(&self) -> Array2<T> {
        let scaled = &self.eigenvectors * &self.eigenvalues.view().insert_axis(ndarray::Axis(0));
        scaled.dot(&self.eigenvectors.t())
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Full eigendecomposition of a symmetric matrix.
pub fn sym_eig<T: Scalar>(a: ArrayView2<'_, T>) -> Result<SpectralDecomposition<T>> {
    let n = check_symmetric(a)?;
    let mut w = Workspace::new(a, n);
    w.tridiagonalize(true);
    w.ql(true)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w.d[j].partial_cmp(&w.d[i]).unwrap_or(std::cmp::Ordering::Equal));

    let mut eigenvalues = Array1::from_iter(order.iter().map(|&k| w.d[k]));
    clip_negative(eigenvalues.as_slice_mut().expect("contiguous"));
    let mut eigenvectors = Array2::zeros((n, n));
    for (col, &k) in order.iter().enumerate() {
        for row in 0..n {
            eigenvectors[[row, col]] = w.v[row * n + k];
        }
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only (descending, clipped). Skips all eigenvector work.
pub fn sym_eigvals<T: Scalar>(a: ArrayView2<'_, T>) -> Result<Vec<T>> {
    let n = check_symmetric(a)?;
    let mut w = Workspace::new(a, n);
    w.tridiagonalize(false);
    w.ql(false)?;
    let mut d = w.d;
    d.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    clip_negative(&mut d);
    Ok(d)
}

fn clip_negative<T: Scalar>(sorted_desc: &mut [T]) {
    let norm = sorted_desc
        .iter()
        .fold(T::zero(), |acc, &x| acc.max(x.abs()));
    let eps = T::lit(CLIP_RELATIVE) * norm;
    for x in sorted_desc.iter_mut() {
        if *x < T::zero() && *x > -eps {
            *x = T::zero();
        }
    }
}

fn check_symmetric<T: Scalar>(a: ArrayView2<'_, T>) -> Result<usize> {
    let (rows, cols) = a.dim();
    if rows != cols {
        return Err(Error::DimensionMismatch {
            expected: rows,
            actual: cols,
        });
    }
    let mut scale = T::zero();
    let mut asym = T::zero();
    for i in 0..rows {
        for j in 0..rows {
            let x = a[[i, j]];
            if !x.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "non-finite matrix entry at ({i}, {j})"
                )));
            }
            scale = scale.max(x.abs());
            if j > i {
                asym = asym.max((x - a[[j, i]]).abs());
            }
        }
    }
    if asym > T::lit(SYMMETRY_TOLERANCE) * (T::one() + scale) {
        return Err(Error::NotSymmetric {
            asymmetry: asym.as_f64(),
        });
    }
    Ok(rows)
}

struct Workspace<T> {
    n: usize,
    /// Row-major n x n; holds the matrix, then the Householder vectors, then
    /// the eigenvectors.
    v: Vec<T>,
    d: Vec<T>,
    e: Vec<T>,
}

impl<T: Scalar> Workspace<T> {
    fn new(a: ArrayView2<'_, T>, n: usize) -> Self {
        // Use the symmetrized lower triangle.
        let half = T::lit(0.5);
        let mut v = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..=i {
                let x = (a[[i, j]] + a[[j, i]]) * half;
                v[i * n + j] = x;
                v[j * n + i] = x;
            }
        }
        Self {
            n,
            v,
            d: vec![T::zero(); n],
            e: vec![T::zero(); n],
        }
    }

    #[inline]
    fn at(&mut self, i: usize, j: usize) -> &mut T {
        &mut self.v[i * self.n + j]
    }

    fn tridiagonalize(&mut self, accumulate: bool) {
        let n = self.n;
        if n == 0 {
            return;
        }
        for j in 0..n {
            self.d[j] = self.v[(n - 1) * n + j];
        }

        for i in (1..n).rev() {
            let mut scale = T::zero();
            let mut h = T::zero();
            for k in 0..i {
                scale = scale + self.d[k].abs();
            }
            if scale == T::zero() {
                self.e[i] = self.d[i - 1];
                for j in 0..i {
                    self.d[j] = self.v[(i - 1) * n + j];
                    *self.at(i, j) = T::zero();
                    *self.at(j, i) = T::zero();
                }
            } else {
                for k in 0..i {
                    self.d[k] = self.d[k] / scale;
                    h = h + self.d[k] * self.d[k];
                }
                let mut f = self.d[i - 1];
                let mut g = h.sqrt();
                if f > T::zero() {
                    g = -g;
                }
                self.e[i] = scale * g;
                h = h - f * g;
                self.d[i - 1] = f - g;
                for j in 0..i {
                    self.e[j] = T::zero();
                }

                for j in 0..i {
                    f = self.d[j];
                    *self.at(j, i) = f;
                    g = self.e[j] + self.v[j * n + j] * f;
                    for k in (j + 1)..i {
                        let vkj = self.v[k * n + j];
                        g = g + vkj * self.d[k];
                        self.e[k] = self.e[k] + vkj * f;
                    }
                    self.e[j] = g;
                }
                f = T::zero();
                for j in 0..i {
                    self.e[j] = self.e[j] / h;
                    f = f + self.e[j] * self.d[j];
                }
                let hh = f / (h + h);
                for j in 0..i {
                    self.e[j] = self.e[j] - hh * self.d[j];
                }
                for j in 0..i {
                    f = self.d[j];
                    g = self.e[j];
                    for k in j..i {
                        let upd = f * self.e[k] + g * self.d[k];
                        *self.at(k, j) = self.v[k * n + j] - upd;
                    }
                    self.d[j] = self.v[(i - 1) * n + j];
                    *self.at(i, j) = T::zero();
                }
            }
            self.d[i] = h;
        }

        if !accumulate {
            for j in 0..n {
                self.d[j] = self.v[j * n + j];
            }
            self.e[0] = T::zero();
            return;
        }

        for i in 0..n - 1 {
            let vii = self.v[i * n + i];
            *self.at(n - 1, i) = vii;
            *self.at(i, i) = T::one();
            let h = self.d[i + 1];
            if h != T::zero() {
                for k in 0..=i {
                    self.d[k] = self.v[k * n + i + 1] / h;
                }
                for j in 0..=i {
                    let mut g = T::zero();
                    for k in 0..=i {
                        g = g + self.v[k * n + i + 1] * self.v[k * n + j];
                    }
                    for k in 0..=i {
                        let upd = g * self.d[k];
                        *self.at(k, j) = self.v[k * n + j] - upd;
                    }
                }
            }
            for k in 0..=i {
                *self.at(k, i + 1) = T::zero();
            }
        }
        for j in 0..n {
            self.d[j] = self.v[(n - 1) * n + j];
            *self.at(n - 1, j) = T::zero();
        }
        *self.at(n - 1, n - 1) = T::one();
        self.e[0] = T::zero();
    }

    fn ql(&mut self, vectors: bool) -> Result<()> {
        let n = self.n;
        if n == 0 {
            return Ok(());
        }
        for i in 1..n {
            self.e[i - 1] = self.e[i];
        }
        self.e[n - 1] = T::zero();

        let two = T::lit(2.0);
        let eps = T::epsilon();
        let mut f = T::zero();
        let mut tst1 = T::zero();
        for l in 0..n {
            tst1 = tst1.max(self.d[l].abs() + self.e[l].abs());
            let mut m = l;
            while m < n - 1 && self.e[m].abs() > eps * tst1 {
                m += 1;
            }

            if m > l {
                let mut iter = 0;
                loop {
                    iter += 1;
                    if iter > MAX_QL_ITERATIONS {
                        return Err(Error::EigenNotConverged {
                            index: l,
                            iterations: iter - 1,
                            residual: self.e[l].abs().as_f64(),
                        });
                    }
                    let mut g = self.d[l];
                    let mut p = (self.d[l + 1] - g) / (two * self.e[l]);
                    let mut r = p.hypot(T::one());
                    if p < T::zero() {
                        r = -r;
                    }
                    self.d[l] = self.e[l] / (p + r);
                    self.d[l + 1] = self.e[l] * (p + r);
                    let dl1 = self.d[l + 1];
                    let mut h = g - self.d[l];
                    for i in (l + 2)..n {
                        self.d[i] = self.d[i] - h;
                    }
                    f = f + h;

                    p = self.d[m];
                    let mut c = T::one();
                    let mut c2 = c;
                    let mut c3 = c;
                    let el1 = self.e[l + 1];
                    let mut s = T::zero();
                    let mut s2 = T::zero();
                    for i in (l..m).rev() {
                        c3 = c2;
                        c2 = c;
                        s2 = s;
                        g = c * self.e[i];
                        h = c * p;
                        r = p.hypot(self.e[i]);
                        self.e[i + 1] = s * r;
                        s = self.e[i] / r;
                        c = p / r;
                        p = c * self.d[i] - s * g;
                        self.d[i + 1] = h + s * (c * g + s * self.d[i]);
                        if vectors {
                            for k in 0..n {
                                let row = k * n;
                                let hk = self.v[row + i + 1];
                                let vki = self.v[row + i];
                                self.v[row + i + 1] = s * vki + c * hk;
                                self.v[row + i] = c * vki - s * hk;
                            }
                        }
                    }
                    p = -s * s2 * c3 * el1 * self.e[l] / dl1;
                    self.e[l] = s * p;
                    self.d[l] = c * p;
                    if self.e[l].abs() <= eps * tst1 {
                        break;
                    }
                }
            }
            self.d[l] = self.d[l] + f;
            self.e[l] = T::zero();
        }
        Ok(())
    }
}

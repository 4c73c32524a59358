use num_traits::{Num, Signed};

use crate::error::{Error, Result};

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
///
/// Works over any ordered field: `f64`, or exact rationals such as
/// `num::BigRational`. `a` is row-major `n x n`.
pub fn solve_linear_system<T>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Result<Vec<T>>
where
    T: Num + Signed + PartialOrd + Clone,
{
    let n = b.len();
    if a.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: a.len(),
        });
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                a[i][col]
                    .abs()
                    .partial_cmp(&a[j][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("non-empty range");
        if a[pivot][col].is_zero() {
            return Err(Error::SingularDesign(format!("zero pivot in column {col}")));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            if a[row][col].is_zero() {
                continue;
            }
            let factor = a[row][col].clone() / a[col][col].clone();
            for k in col..n {
                let upd = factor.clone() * a[col][k].clone();
                a[row][k] = a[row][k].clone() - upd;
            }
            let upd = factor * b[col].clone();
            b[row] = b[row].clone() - upd;
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row].clone();
        for k in (row + 1)..n {
            acc = acc - a[row][k].clone() * x[k].clone();
        }
        x[row] = acc / a[row][row].clone();
    }
    Ok(x)
}

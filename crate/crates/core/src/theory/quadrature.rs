//! Adaptive Simpson quadrature.

use crate::scalar::Scalar;

const MAX_DEPTH: u32 = 48;

/// `int_lo^hi g`, refining each panel until the local Richardson error
/// estimate is below `tol` (scaled down by half on each split).
pub fn adaptive_simpson<T, G>(g: &G, lo: T, hi: T, tol: T) -> T
where
    T: Scalar,
    G: Fn(T) -> T,
{
    if hi <= lo {
        return T::zero();
    }
    let mid = (lo + hi) * T::lit(0.5);
    let (flo, fmid, fhi) = (g(lo), g(mid), g(hi));
    let whole = simpson(lo, hi, flo, fmid, fhi);
    refine(g, lo, hi, flo, fmid, fhi, whole, tol, MAX_DEPTH)
}

fn simpson<T: Scalar>(lo: T, hi: T, flo: T, fmid: T, fhi: T) -> T {
    (hi - lo) / T::lit(6.0) * (flo + T::lit(4.0) * fmid + fhi)
}

#[allow(clippy::too_many_arguments)]
fn refine<T, G>(g: &G, lo: T, hi: T, flo: T, fmid: T, fhi: T, whole: T, tol: T, depth: u32) -> T
where
    T: Scalar,
    G: Fn(T) -> T,
{
    let half = T::lit(0.5);
    let mid = (lo + hi) * half;
    let lm = (lo + mid) * half;
    let rm = (mid + hi) * half;
    let (flm, frm) = (g(lm), g(rm));
    let left = simpson(lo, mid, flo, flm, fmid);
    let right = simpson(mid, hi, fmid, frm, fhi);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= T::lit(15.0) * tol {
        return left + right + delta / T::lit(15.0);
    }
    refine(g, lo, mid, flo, flm, fmid, left, tol * half, depth - 1)
        + refine(g, mid, hi, fmid, frm, fhi, right, tol * half, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_smooth_functions() {
        let v: f64 = adaptive_simpson(&|x: f64| x * x * x, 0.0, 2.0, 1e-12);
        assert!((v - 4.0).abs() < 1e-12);
        let v: f64 = adaptive_simpson(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-10);
        assert!((v - 2.0).abs() < 1e-9);
        assert_eq!(adaptive_simpson(&|x: f64| x, 1.0, 1.0, 1e-8), 0.0);
    }
}

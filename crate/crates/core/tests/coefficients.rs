use num::{BigInt, BigRational, One, Zero};
use proptest::prelude::*;

use spectra::estimators::{closed_form_coefficients, solve_coefficient_system};
use spectra::{make_scheme, Error};

fn rational(n: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Checks `sum C_j = 1` and `sum C_j / n_j^l = 0` (`1 <= l < m`) in exact arithmetic.
fn exact_identities_hold(sizes: &[usize], c: &[BigRational]) -> bool {
    let total: BigRational = c.iter().cloned().sum();
    if total != BigRational::one() {
        return false;
    }
    (1..sizes.len()).all(|l| {
        let moment: BigRational = sizes
            .iter()
            .zip(c)
            .map(|(&n, cj)| {
                let mut p = BigRational::one();
                for _ in 0..l {
                    p /= rational(n);
                }
                cj * p
            })
            .sum();
        moment.is_zero()
    })
}

#[test]
fn three_level_coefficients_are_exact_thirds() {
    let sizes = [100, 200, 400];
    let c = closed_form_coefficients::<BigRational>(&sizes);
    let third = |k: i64| BigRational::new(BigInt::from(k), BigInt::from(3));
    assert_eq!(c, vec![third(1), third(-6), third(8)]);
    assert!(exact_identities_hold(&sizes, &c));
    assert_eq!(solve_coefficient_system::<BigRational>(&sizes).unwrap(), c);
}

#[test]
fn two_level_oracle_by_hand() {
    // C1 + C2 = 1 and C1/50 + C2/100 = 0 give C1 = -1, C2 = 2.
    let c = closed_form_coefficients::<BigRational>(&[50, 100]);
    assert_eq!(c, vec![rational(0) - rational(1), rational(2)]);
}

#[test]
fn floating_schemes_match_exact_coefficients_over_sweep() {
    for m in 2..=6 {
        for q in [1.5, 2.0, 3.0] {
            for n in [1_000usize, 10_000] {
                let scheme = make_scheme(m, n, q).unwrap();
                scheme.verify().unwrap();
                let exact = closed_form_coefficients::<BigRational>(scheme.sizes());
                assert!(exact_identities_hold(scheme.sizes(), &exact));
                let biggest = exact
                    .iter()
                    .map(|c| num::ToPrimitive::to_f64(c).unwrap().abs())
                    .fold(0.0, f64::max);
                for (c, e) in scheme.coeffs().iter().zip(&exact) {
                    let e = num::ToPrimitive::to_f64(e).unwrap();
                    assert!(
                        (c - e).abs() <= 1e-12 * biggest,
                        "m={m} q={q} n={n}: {c} vs {e}"
                    );
                }
            }
        }
    }
}

#[test]
fn rounding_collisions_fail_loudly() {
    assert!(matches!(make_scheme(2, 3, 2.0), Err(Error::SizeCollision { .. })));
    assert!(matches!(make_scheme(6, 40, 2.0), Err(Error::SizeCollision { .. })));
    assert!(matches!(make_scheme(3, 20, 1.02), Err(Error::SizeCollision { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exact_closed_form_solves_the_system(
        mut sizes in prop::collection::btree_set(2usize..5000, 2..7).prop_map(|s| s.into_iter().collect::<Vec<_>>())
    ) {
        sizes.sort_unstable();
        let c = closed_form_coefficients::<BigRational>(&sizes);
        prop_assert!(exact_identities_hold(&sizes, &c));
        prop_assert_eq!(solve_coefficient_system::<BigRational>(&sizes).unwrap(), c);
    }

    #[test]
    fn geometric_schemes_verify(m in 2usize..7, q in 1.2f64..4.0, n in 500usize..50_000) {
        match make_scheme(m, n, q) {
            Ok(s) => {
                prop_assert!(s.identity_residual() <= 1e-10);
                prop_assert_eq!(s.n(), n);
                prop_assert!(s.sizes().windows(2).all(|w| w[0] < w[1]));
                prop_assert!(s.sum_abs_coeffs() >= 1.0);
            }
            Err(e) => prop_assert!(matches!(e, Error::SizeCollision { .. }), "{e}"),
        }
    }
}

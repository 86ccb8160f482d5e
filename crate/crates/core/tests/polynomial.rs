use ecs_core::polynomial::{
    compose_for_dimension, cubic_brackets, cubic_family, isolate_roots, quadratic_family, quartic_family,
    resultant, GlzPolynomial, IntMatrix,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use proptest::prelude::*;

/// Valid `(k, l)` of the cubic family with `k ≤ 12`.
fn cubic_params() -> impl Strategy<Value = (i64, i64)> {
    (5i64..=12).prop_flat_map(|k| (Just(k), (k + 1)..=(k * k / 4)))
}

/// Valid `(k, m, l)` of the quartic family with `k ≤ 12`.
fn quartic_params() -> impl Strategy<Value = (i64, i64, i64)> {
    (7i64..=12)
        .prop_flat_map(|k| (Just(k), k..=(2 * k - 7)))
        .prop_flat_map(|(k, m)| {
            let lo = k + m - 1; // smallest l with 2(k+m)−4 < 2l
            let hi = (4 * k + m - 9) / 2; // largest l with 2l < 4k+m−8
            (Just(k), Just(m), lo..=hi.max(lo))
        })
        .prop_filter("l range", |&(k, m, l)| 2 * l < 4 * k + m - 8)
}

fn sign_at(p: &GlzPolynomial, num: i64, den: i64) -> i32 {
    // Horner in ℚ, independent of the crate's evaluator.
    let x = BigRational::new(BigInt::from(num), BigInt::from(den));
    let mut acc = BigRational::from_integer(BigInt::from(0));
    for &c in p.coefficients().iter().rev() {
        acc = acc * &x + BigRational::from_integer(BigInt::from(c));
    }
    if acc.is_positive() {
        1
    } else if acc.is_negative() {
        -1
    } else {
        0
    }
}

/// Roots from the eigenvalues of the companion matrix, sorted.
fn eigen_roots(p: &GlzPolynomial) -> Vec<f64> {
    let c = IntMatrix::companion(p).to_f64();
    let eig = c.complex_eigenvalues();
    assert!(eig.iter().all(|z| z.im.abs() < 1e-9), "{eig:?}");
    let mut r: Vec<f64> = eig.iter().map(|z| z.re).collect();
    r.sort_by(f64::total_cmp);
    r
}

fn assert_gl_shape(p: &GlzPolynomial) {
    let m = p.degree();
    assert_eq!(p.leading(), if m.is_multiple_of(2) { 1 } else { -1 });
    assert_eq!(p.constant().abs(), 1);
}

#[test]
fn cubic_reference_case() {
    let p = cubic_family(5, 6).unwrap();
    assert_eq!(p.coefficients(), &[1, -6, 5, -1]);
    let b = cubic_brackets(5, 6).unwrap();
    assert_eq!((b[0].lower, b[0].upper), ((1, 6), (1, 1)));
    assert_eq!((b[1].lower, b[1].upper), ((1, 1), (5, 2)));
    assert_eq!((b[2].lower, b[2].upper), ((5, 2), (5, 1)));
    let roots = isolate_roots(&p).unwrap().spectrum;
    for (got, want) in roots.values().iter().zip([0.19806226419516, 1.55495813208737, 3.24697960371747]) {
        assert!((got - want).abs() < 1e-12, "{got}");
    }
    for r in roots.values() {
        assert!(p.eval_f64(*r).abs() < 1e-10);
    }
    assert!(cubic_family(2, 1).is_err());
}

#[test]
fn quadratic_reference_cases() {
    let p = quadratic_family(-3).unwrap();
    let s = isolate_roots(&p).unwrap().spectrum;
    let want = [(3.0 - 5f64.sqrt()) / 2.0, (3.0 + 5f64.sqrt()) / 2.0];
    for (g, w) in s.values().iter().zip(want) {
        assert!((g - w).abs() < 1e-12);
    }
    let s = isolate_roots(&quadratic_family(-4).unwrap()).unwrap().spectrum;
    for (g, w) in s.values().iter().zip([2.0 - 3f64.sqrt(), 2.0 + 3f64.sqrt()]) {
        assert!((g - w).abs() < 1e-12);
    }
    assert!(quadratic_family(-2).is_err());
}

#[test]
fn quartic_reference_cases() {
    let (p, v) = quartic_family(8, 9, 16).unwrap();
    assert_eq!(p.coefficients(), &[1, -8, 16, -9, 1]);
    assert_eq!((v.at_one, v.at_two, v.sixteen_at_half), (1, -7, -1));
    let (_, v) = quartic_family(7, 7, 13).unwrap();
    assert!(v.at_one > 0 && v.at_two < 0);
    assert!(quartic_family(7, 8, 14).is_err());
}

#[test]
fn compositions_for_four_and_five() {
    let p4 = compose_for_dimension(4).unwrap();
    assert_eq!(p4.coefficients(), &[1, -7, 14, -7, 1]);
    let p5 = compose_for_dimension(5).unwrap();
    // (1 − 3λ + λ²)(1 − 6λ + 5λ² − λ³)
    assert_eq!(p5.coefficients(), &[1, -9, 24, -22, 8, -1]);
    assert_ne!(resultant(&[1, -3, 1], &[1, -6, 5, -1]), BigInt::from(0));
    assert_eq!(compose_for_dimension(3).unwrap(), cubic_family(5, 6).unwrap());
    assert!(compose_for_dimension(2).is_err());
}

#[test]
fn companion_of_the_golden_quadratic() {
    let c = IntMatrix::companion(&quadratic_family(-3).unwrap());
    assert_eq!(c.rows(), vec![vec![0, -1], vec![1, 3]]);
    assert_eq!(c.det(), BigInt::from(1));
    assert_eq!(c.trace(), 3);
}

#[test]
fn invalid_inputs_are_rejected() {
    // λ² + λ + 1 has complex roots.
    assert!(isolate_roots(&GlzPolynomial::new(vec![1, 1, 1]).unwrap()).is_err());
    // (λ − 1)² has a repeated unit root.
    assert!(isolate_roots(&GlzPolynomial::new(vec![1, -2, 1]).unwrap()).is_err());
    // Wrong leading coefficient for the degree.
    assert!(GlzPolynomial::new(vec![1, -3, -1]).is_err());
    assert!(GlzPolynomial::new(vec![2, -3, 1]).is_err());
}

#[test]
fn composed_roots_for_every_small_dimension() {
    for m in 3..=10 {
        let p = compose_for_dimension(m).unwrap();
        assert_gl_shape(&p);
        let iso = isolate_roots(&p).unwrap();
        let s = &iso.spectrum;
        assert_eq!(s.len(), m);
        assert!(s.is_multiplicity_free());
        assert!(s.values().iter().all(|&l| l > 0.0 && (l - 1.0).abs() > 1e-9));
        assert!(s.moduli_not_all_equal());
        assert!(iso.brackets.iter().all(|b| b.verify(&p)));
        for (a, b) in s.values().iter().zip(eigen_roots(&p)) {
            assert!((a - b).abs() < 1e-8 * b.max(1.0), "m = {m}: {a} vs {b}");
        }
    }
}

proptest! {
    #[test]
    fn cubic_brackets_change_sign((k, l) in cubic_params()) {
        let p = cubic_family(k, l).unwrap();
        assert_gl_shape(&p);
        let cuts = [(1, l), (1, 1), (k, 2), (k, 1)];
        for w in cuts.windows(2) {
            prop_assert!(sign_at(&p, w[0].0, w[0].1) * sign_at(&p, w[1].0, w[1].1) < 0);
        }
        prop_assert_eq!(cubic_brackets(k, l).unwrap().len(), 3);
    }

    #[test]
    fn quartic_identity_is_exact((k, m, l) in quartic_params()) {
        let (p, v) = quartic_family(k, m, l).unwrap();
        assert_gl_shape(&p);
        prop_assert_eq!(v.sixteen_at_half - v.at_two, 6 * (m - k));
        prop_assert_eq!(i64::from(sign_at(&p, 1, 2)), v.sixteen_at_half.signum());
        let iso = isolate_roots(&p).unwrap();
        prop_assert_eq!(iso.spectrum.len(), 4);
    }

    #[test]
    fn companion_round_trips((k, l) in cubic_params(), q in -8i64..=-3) {
        let p = cubic_family(k, l).unwrap().multiply(&quadratic_family(q).unwrap());
        let c = IntMatrix::companion(&p);
        prop_assert_eq!(c.char_poly(), p.coefficients().to_vec());
        prop_assert_eq!(c.det().abs(), BigInt::from(1));
        let inv = c.unimodular_inverse().unwrap();
        prop_assert!(c.checked_mul(&inv).unwrap().is_identity());
    }

    #[test]
    fn cubic_roots_match_companion_eigenvalues((k, l) in cubic_params()) {
        let p = cubic_family(k, l).unwrap();
        let s = isolate_roots(&p).unwrap().spectrum;
        for (a, b) in s.values().iter().zip(eigen_roots(&p)) {
            prop_assert!((a - b).abs() < 1e-8 * b.max(1.0));
        }
    }
}

//! Integer polynomials with leading coefficient `(-1)^m` and constant term
//! `±1`, the families that realize positive real spectra, exact root
//! isolation and integer companion matrices.
//!
//! Coefficients are always stored constant-first. Every sign test runs in
//! exact arithmetic; floating point enters only when an isolating interval
//! is reported as a real number.

mod matrix;
mod roots;

pub use matrix::IntMatrix;
pub use roots::{isolate_roots, isolate_roots_with, RootBracket, RootIsolation, Spectrum};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{EcsError, Result};

/// Default gap required between every root and 1.
pub const DEFAULT_UNIT_GAP: f64 = 1e-9;
/// Default width of the final isolating intervals.
pub const DEFAULT_ROOT_TOL: f64 = 1e-12;

/// A GL(m,ℤ) polynomial: integer coefficients, leading `(-1)^m`, constant `±1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "PolynomialRecord", into = "PolynomialRecord")]
pub struct GlzPolynomial {
    coefficients: Vec<i64>,
}

/// Wire form: `{"degree": m, "coefficients": [c0, c1, ..., cm]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolynomialRecord {
    pub degree: usize,
    pub coefficients: Vec<i64>,
}

impl TryFrom<PolynomialRecord> for GlzPolynomial {
    type Error = EcsError;

    fn try_from(r: PolynomialRecord) -> Result<Self> {
        if r.coefficients.len() != r.degree + 1 {
            return Err(EcsError::Schema(format!(
                "degree {} needs {} coefficients, found {}",
                r.degree,
                r.degree + 1,
                r.coefficients.len()
            )));
        }
        GlzPolynomial::new(r.coefficients)
    }
}

impl From<GlzPolynomial> for PolynomialRecord {
    fn from(p: GlzPolynomial) -> Self {
        PolynomialRecord {
            degree: p.degree(),
            coefficients: p.coefficients,
        }
    }
}

impl GlzPolynomial {
    /// Validates the GL(m,ℤ) shape of a constant-first coefficient list.
    pub fn new(coefficients: Vec<i64>) -> Result<Self> {
        if coefficients.len() < 2 {
            return Err(EcsError::ParameterDomain(
                "a GL(m,Z) polynomial needs degree m >= 1".into(),
            ));
        }
        let m = coefficients.len() - 1;
        let lead = coefficients[m];
        let expected = if m.is_multiple_of(2) { 1 } else { -1 };
        if lead != expected {
            return Err(EcsError::ParameterDomain(format!(
                "leading coefficient {lead} differs from (-1)^{m} = {expected}"
            )));
        }
        if coefficients[0].abs() != 1 {
            return Err(EcsError::ParameterDomain(format!(
                "constant term {} is not +1 or -1",
                coefficients[0]
            )));
        }
        Ok(GlzPolynomial { coefficients })
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Constant-first coefficients.
    pub fn coefficients(&self) -> &[i64] {
        &self.coefficients
    }

    pub fn leading(&self) -> i64 {
        self.coefficients[self.degree()]
    }

    pub fn constant(&self) -> i64 {
        self.coefficients[0]
    }

    pub fn eval_int(&self, x: i64) -> BigInt {
        let xb = BigInt::from(x);
        self.coefficients
            .iter()
            .rev()
            .fold(BigInt::zero(), |acc, &c| acc * &xb + BigInt::from(c))
    }

    /// Exact value at a rational point.
    pub fn eval_rational(&self, x: &BigRational) -> BigRational {
        self.coefficients
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, &c| {
                acc * x + BigRational::from_integer(BigInt::from(c))
            })
    }

    /// Exact sign at `num/den` (den > 0), via `den^m P(num/den)`.
    pub fn sign_at(&self, num: i64, den: i64) -> i32 {
        assert!(den > 0, "denominator must be positive");
        let m = self.degree() as u32;
        let (a, b) = (BigInt::from(num), BigInt::from(den));
        let mut total = BigInt::zero();
        for (i, &c) in self.coefficients.iter().enumerate() {
            total += BigInt::from(c) * a.pow(i as u32) * b.pow(m - i as u32);
        }
        sign_of(&total)
    }

    /// Floating-point Horner evaluation.
    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * x + c as f64)
    }

    pub fn derivative_f64(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (i, &c) in self.coefficients.iter().enumerate().skip(1).rev() {
            acc = acc * x + (i as f64) * c as f64;
        }
        acc
    }

    /// Product of two GL polynomials, again of GL shape.
    pub fn multiply(&self, other: &GlzPolynomial) -> GlzPolynomial {
        GlzPolynomial {
            coefficients: multiply_coefficients(&self.coefficients, &other.coefficients),
        }
    }

    pub(crate) fn to_rational(&self) -> Vec<BigRational> {
        self.coefficients
            .iter()
            .map(|&c| BigRational::from_integer(BigInt::from(c)))
            .collect()
    }
}

impl std::fmt::Display for GlzPolynomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for (i, &c) in self.coefficients.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let sign = if c < 0 { "-" } else if first { "" } else { "+" };
            let mag = c.abs();
            let body = match (i, mag) {
                (0, _) => format!("{mag}"),
                (1, 1) => "x".to_string(),
                (1, _) => format!("{mag}x"),
                (_, 1) => format!("x^{i}"),
                _ => format!("{mag}x^{i}"),
            };
            write!(f, "{sign}{body}")?;
            first = false;
        }
        Ok(())
    }
}

pub(crate) fn sign_of(x: &BigInt) -> i32 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

pub(crate) fn multiply_coefficients(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut out = vec![0i64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// An interval with rational endpoints on which the polynomial changes sign.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalBracket {
    pub lower: (i64, i64),
    pub upper: (i64, i64),
    pub signs: (i32, i32),
}

impl RationalBracket {
    fn checked(p: &GlzPolynomial, lower: (i64, i64), upper: (i64, i64)) -> Option<Self> {
        let signs = (p.sign_at(lower.0, lower.1), p.sign_at(upper.0, upper.1));
        (signs.0 * signs.1 < 0).then_some(RationalBracket {
            lower,
            upper,
            signs,
        })
    }

    pub fn lower_f64(&self) -> f64 {
        self.lower.0 as f64 / self.lower.1 as f64
    }

    pub fn upper_f64(&self) -> f64 {
        self.upper.0 as f64 / self.upper.1 as f64
    }
}

/// `λ ↦ −λ³ + kλ² − lλ + 1` for `2 ≤ k < l ≤ k²/4`.
pub fn cubic_family(k: i64, l: i64) -> Result<GlzPolynomial> {
    if k < 2 {
        return Err(EcsError::ParameterDomain(format!("2 <= k fails for k = {k}")));
    }
    if l <= k {
        return Err(EcsError::ParameterDomain(format!(
            "k < l fails for k = {k}, l = {l}"
        )));
    }
    if 4 * l > k * k {
        return Err(EcsError::ParameterDomain(format!(
            "l <= k^2/4 fails for k = {k}, l = {l}"
        )));
    }
    GlzPolynomial::new(vec![1, -l, k, -1])
}

/// The three sign-change intervals `(1/l, 1)`, `(1, k/2)`, `(k/2, k)` of the
/// cubic family, each certified by exact evaluation.
pub fn cubic_brackets(k: i64, l: i64) -> Result<[RationalBracket; 3]> {
    let p = cubic_family(k, l)?;
    let cuts = [(1, l), (1, 1), (k, 2), (k, 1)];
    let mut out = Vec::with_capacity(3);
    for w in cuts.windows(2) {
        let b = RationalBracket::checked(&p, w[0], w[1]).ok_or_else(|| {
            EcsError::Consistency(format!(
                "no sign change on ({}/{}, {}/{}) for k = {k}, l = {l}",
                w[0].0, w[0].1, w[1].0, w[1].1
            ))
        })?;
        out.push(b);
    }
    Ok(out.try_into().expect("three windows"))
}

/// `λ ↦ λ² + kλ + 1` for integer `k < −2`.
pub fn quadratic_family(k: i64) -> Result<GlzPolynomial> {
    if k >= -2 {
        return Err(EcsError::ParameterDomain(format!("k < -2 fails for k = {k}")));
    }
    GlzPolynomial::new(vec![1, k, 1])
}

/// The exact test values `(P(1), P(2), 16·P(1/2))` of the quartic family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuarticTestValues {
    pub at_one: i64,
    pub at_two: i64,
    pub sixteen_at_half: i64,
}

/// `λ ↦ λ⁴ − mλ³ + lλ² − kλ + 1` with `k ≥ 7`, `k ≤ m ≤ 2k−7` and
/// `2(k+m)−4 < 2l < 4k+m−8`; these force `P(2) ≤ 16P(1/2) < 0 < P(1)`.
pub fn quartic_family(k: i64, m: i64, l: i64) -> Result<(GlzPolynomial, QuarticTestValues)> {
    if k < 7 {
        return Err(EcsError::ParameterDomain(format!("k >= 7 fails for k = {k}")));
    }
    if m < k {
        return Err(EcsError::ParameterDomain(format!(
            "k <= m fails for k = {k}, m = {m}"
        )));
    }
    if m > 2 * k - 7 {
        return Err(EcsError::ParameterDomain(format!(
            "m <= 2k-7 fails for k = {k}, m = {m}"
        )));
    }
    if 2 * (k + m) - 4 >= 2 * l {
        return Err(EcsError::ParameterDomain(format!(
            "2(k+m)-4 < 2l fails for k = {k}, m = {m}, l = {l}"
        )));
    }
    if 2 * l >= 4 * k + m - 8 {
        return Err(EcsError::ParameterDomain(format!(
            "2l < 4k+m-8 fails for k = {k}, m = {m}, l = {l}"
        )));
    }
    let p = GlzPolynomial::new(vec![1, -k, l, -m, 1])?;
    let values = quartic_test_values(&p);
    if !(values.at_two <= values.sixteen_at_half
        && values.sixteen_at_half < 0
        && values.at_one > 0)
    {
        return Err(EcsError::Consistency(format!(
            "P(2) <= 16P(1/2) < 0 < P(1) violated: {values:?}"
        )));
    }
    Ok((p, values))
}

pub fn quartic_test_values(p: &GlzPolynomial) -> QuarticTestValues {
    let c = p.coefficients();
    // 16·P(1/2) = Σ c_i 2^(4-i) for a quartic.
    let sixteen_at_half = c
        .iter()
        .enumerate()
        .map(|(i, &ci)| ci << (4 - i))
        .sum();
    QuarticTestValues {
        at_one: c.iter().sum(),
        at_two: c.iter().enumerate().map(|(i, &ci)| ci << i).sum(),
        sixteen_at_half,
    }
}

/// Quadratic factors `k = −3, −4, …` for each pair of roots, times the cubic
/// `(5, 6)` when `m` is odd.
pub fn compose_for_dimension(m: usize) -> Result<GlzPolynomial> {
    if m < 3 {
        return Err(EcsError::ParameterDomain(format!("m >= 3 fails for m = {m}")));
    }
    let mut acc = if m % 2 == 1 {
        cubic_family(5, 6)?
    } else {
        GlzPolynomial {
            coefficients: vec![1],
        }
    };
    for j in 0..(m - 3 * (m % 2)) / 2 {
        acc = acc.multiply(&quadratic_family(-3 - j as i64)?);
    }
    GlzPolynomial::new(acc.coefficients)
}

/// Exact polynomial over ℚ, constant-first, trailing zeros trimmed.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct RatPoly(pub Vec<BigRational>);

impl RatPoly {
    pub fn trimmed(mut c: Vec<BigRational>) -> Self {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        RatPoly(c)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn derivative(&self) -> Self {
        RatPoly::trimmed(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.0
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    pub fn rem(&self, d: &RatPoly) -> RatPoly {
        let dd = d.degree().expect("division by zero polynomial");
        let lead = &d.0[dd];
        let mut r = self.0.clone();
        while r.len() > dd && !r.is_empty() {
            let top = r.len() - 1;
            let q = &r[top] / lead;
            if !q.is_zero() {
                for (i, c) in d.0.iter().enumerate() {
                    let idx = top - dd + i;
                    r[idx] = &r[idx] - &q * c;
                }
            }
            r.pop();
            while r.last().is_some_and(|x| x.is_zero()) {
                r.pop();
            }
        }
        RatPoly::trimmed(r)
    }

    pub fn neg(&self) -> RatPoly {
        RatPoly(self.0.iter().map(|c| -c).collect())
    }

    /// Monic gcd.
    pub fn gcd(&self, other: &RatPoly) -> RatPoly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        match a.0.last().cloned() {
            Some(lead) => RatPoly(a.0.iter().map(|c| c / &lead).collect()),
            None => a,
        }
    }
}

/// Greatest common divisor of two integer polynomials, monic over ℚ, as
/// constant-first rationals.
pub fn polynomial_gcd(a: &GlzPolynomial, b: &GlzPolynomial) -> Vec<BigRational> {
    RatPoly::trimmed(a.to_rational())
        .gcd(&RatPoly::trimmed(b.to_rational()))
        .0
}

/// Resultant of two integer polynomials via the Sylvester determinant.
pub fn resultant(a: &[i64], b: &[i64]) -> BigInt {
    let (m, n) = (a.len() - 1, b.len() - 1);
    let size = m + n;
    if size == 0 {
        return BigInt::one();
    }
    let mut rows = vec![vec![BigInt::zero(); size]; size];
    // Highest power first in each Sylvester row.
    for r in 0..n {
        for (j, &c) in a.iter().rev().enumerate() {
            rows[r][r + j] = BigInt::from(c);
        }
    }
    for r in 0..m {
        for (j, &c) in b.iter().rev().enumerate() {
            rows[n + r][r + j] = BigInt::from(c);
        }
    }
    matrix::bareiss_det(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_reference_coefficients() {
        let p = cubic_family(5, 6).unwrap();
        assert_eq!(p.coefficients(), &[1, -6, 5, -1]);
        assert_eq!(p.leading(), -1);
        let b = cubic_brackets(5, 6).unwrap();
        assert_eq!(b[0].lower, (1, 6));
        assert_eq!(b[1].upper, (5, 2));
        assert_eq!(b[2].upper, (5, 1));
    }

    #[test]
    fn cubic_rejects_small_l() {
        let e = cubic_family(2, 1).unwrap_err();
        assert!(e.to_string().contains("k < l"), "{e}");
        assert!(cubic_family(5, 7).unwrap_err().to_string().contains("k^2/4"));
        assert!(cubic_family(1, 3).is_err());
    }

    #[test]
    fn quadratic_boundary() {
        assert_eq!(quadratic_family(-3).unwrap().coefficients(), &[1, -3, 1]);
        assert_eq!(quadratic_family(-4).unwrap().coefficients(), &[1, -4, 1]);
        assert!(quadratic_family(-2).is_err());
    }

    #[test]
    fn quartic_reference_values() {
        let (p, v) = quartic_family(8, 9, 16).unwrap();
        assert_eq!(p.coefficients(), &[1, -8, 16, -9, 1]);
        assert_eq!(
            v,
            QuarticTestValues {
                at_one: 1,
                at_two: -7,
                sixteen_at_half: -1
            }
        );
        let (_, v) = quartic_family(7, 7, 13).unwrap();
        assert_eq!((v.at_one, v.at_two), (1, -1));
        let e = quartic_family(7, 8, 14).unwrap_err();
        assert!(e.to_string().contains("m <= 2k-7"), "{e}");
    }

    #[test]
    fn quartic_values_match_exact_rational_evaluation() {
        let (p, v) = quartic_family(9, 10, 18).unwrap();
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        let sixteen = BigRational::from_integer(BigInt::from(16));
        assert_eq!(
            p.eval_rational(&half) * sixteen,
            BigRational::from_integer(BigInt::from(v.sixteen_at_half))
        );
        assert_eq!(p.eval_int(2), BigInt::from(v.at_two));
        assert_eq!(p.eval_int(1), BigInt::from(v.at_one));
    }

    #[test]
    fn composition_shapes() {
        assert_eq!(compose_for_dimension(3).unwrap(), cubic_family(5, 6).unwrap());
        let p4 = compose_for_dimension(4).unwrap();
        // (x^2 - 3x + 1)(x^2 - 4x + 1) expanded by hand.
        assert_eq!(p4.coefficients(), &[1, -7, 14, -7, 1]);
        let p5 = compose_for_dimension(5).unwrap();
        assert_eq!(p5.degree(), 5);
        assert_eq!(p5.leading(), -1);
        assert_eq!(p5.constant(), 1);
        assert_ne!(resultant(&[1, -3, 1], &[1, -6, 5, -1]), BigInt::zero());
        assert!(compose_for_dimension(2).is_err());
    }

    #[test]
    fn gl_shape_is_enforced() {
        assert!(GlzPolynomial::new(vec![2, -3, 1]).is_err());
        assert!(GlzPolynomial::new(vec![1, -3, -1]).is_err());
        assert!(GlzPolynomial::new(vec![-1, 0, 0, -1]).is_ok());
    }

    #[test]
    fn gcd_detects_repeated_factor() {
        let q = quadratic_family(-3).unwrap();
        let sq = q.multiply(&q);
        let d = RatPoly::trimmed(sq.to_rational()).derivative();
        let g = RatPoly::trimmed(sq.to_rational()).gcd(&d);
        assert_eq!(g.degree(), Some(2));
    }

    #[test]
    fn display_is_readable() {
        assert_eq!(cubic_family(5, 6).unwrap().to_string(), "-x^3+5x^2-6x+1");
    }

    #[test]
    fn serde_wire_form() {
        let p = quadratic_family(-3).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"degree":2,"coefficients":[1,-3,1]}"#);
        let back: GlzPolynomial = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<GlzPolynomial>(r#"{"degree":2,"coefficients":[1,-3,2]}"#).is_err());
    }
}

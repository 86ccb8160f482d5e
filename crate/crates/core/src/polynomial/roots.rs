//! Sturm-sequence root isolation with exact sign tests at dyadic endpoints.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{GlzPolynomial, RatPoly, DEFAULT_ROOT_TOL, DEFAULT_UNIT_GAP};
use crate::error::{EcsError, Result};

/// Interval `(lower, upper)` with `P(lower)·P(upper) < 0`, both endpoints
/// dyadic so that the f64 values are the exact rationals that were tested.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootBracket {
    pub lower: f64,
    pub upper: f64,
    /// Signs of `P(lower)` and `P(upper)`.
    pub witness: (i32, i32),
}

impl RootBracket {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// Re-evaluates the witness exactly.
    pub fn verify(&self, p: &GlzPolynomial) -> bool {
        let lo = exact_sign(p, self.lower);
        let hi = exact_sign(p, self.upper);
        lo * hi < 0 && (lo, hi) == self.witness
    }
}

/// Target or measured Floquet multipliers, sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    values: Vec<f64>,
    multiplicity_free: bool,
}

impl Spectrum {
    /// Positive values bounded away from 1 by `gap`.
    pub fn positive(values: Vec<f64>, gap: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(EcsError::SpectrumStructure("empty spectrum".into()));
        }
        for &v in &values {
            if !(v.is_finite() && v > 0.0) {
                return Err(EcsError::SpectrumStructure(format!(
                    "value {v} is not a positive real"
                )));
            }
            if (v - 1.0).abs() <= gap {
                return Err(EcsError::UnitRoot { root: v, gap });
            }
        }
        Ok(Spectrum::measured(values))
    }

    /// Admissible spectrum: positive, bounded away from 1 by `gap`, and not of
    /// the form `{λ}` or `{λ, 1/λ}` (the moduli `|log λᵢ|` are not all equal).
    pub fn new(values: Vec<f64>, gap: f64) -> Result<Self> {
        let s = Spectrum::positive(values, gap)?;
        if !s.moduli_not_all_equal() {
            return Err(EcsError::DegenerateSpectrum(format!(
                "|log λ| equal for all of {:?}",
                s.values
            )));
        }
        Ok(s)
    }

    /// Sorted values without admissibility checks (e.g. multipliers measured
    /// from an arbitrary curve).
    pub fn measured(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| a.total_cmp(b));
        let multiplicity_free = values
            .windows(2)
            .all(|w| (w[1] - w[0]).abs() > 1e-12 * w[1].abs().max(1.0));
        Spectrum {
            values,
            multiplicity_free,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_multiplicity_free(&self) -> bool {
        self.multiplicity_free
    }

    pub fn moduli_not_all_equal(&self) -> bool {
        let logs: Vec<f64> = self.values.iter().map(|v| v.ln().abs()).collect();
        let max = logs.iter().cloned().fold(f64::MIN, f64::max);
        let min = logs.iter().cloned().fold(f64::MAX, f64::min);
        max - min > 1e-10 * max.max(1e-300)
    }

    /// Whether the admissibility condition holds with the given unit gap.
    pub fn is_admissible(&self, gap: f64) -> bool {
        self.values
            .iter()
            .all(|&v| v > 0.0 && (v - 1.0).abs() > gap)
            && self.moduli_not_all_equal()
    }

    pub fn max_abs_diff(&self, other: &Spectrum) -> f64 {
        assert_eq!(self.len(), other.len(), "spectra of different sizes");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Spectrum together with its per-root certificates.
#[derive(Debug, Clone, PartialEq)]
pub struct RootIsolation {
    pub spectrum: Spectrum,
    pub brackets: Vec<RootBracket>,
}

pub fn isolate_roots(p: &GlzPolynomial) -> Result<RootIsolation> {
    isolate_roots_with(p, DEFAULT_ROOT_TOL, DEFAULT_UNIT_GAP)
}

/// All roots of `p`, requiring them to be real, simple, positive and away from
/// 1. Counting uses the Sturm sequence of `p`; refinement is exact bisection.
pub fn isolate_roots_with(p: &GlzPolynomial, tol: f64, gap: f64) -> Result<RootIsolation> {
    let m = p.degree();
    let poly = RatPoly::trimmed(p.to_rational());
    let chain = sturm_chain(&poly);
    let last = chain.last().expect("nonempty chain");
    if last.degree().unwrap_or(0) > 0 {
        return Err(EcsError::SpectrumStructure(format!(
            "{p} has repeated roots (gcd with derivative has degree {})",
            last.degree().unwrap_or(0)
        )));
    }
    let real = variations_at_infinity(&chain, false) - variations_at_infinity(&chain, true);
    if real != m {
        return Err(EcsError::SpectrumStructure(format!(
            "{p} has {} complex roots",
            m - real
        )));
    }
    if p.eval_int(1).is_zero() {
        return Err(EcsError::UnitRoot { root: 1.0, gap });
    }
    let zero = BigRational::zero();
    let positive = variations(&chain, &zero) - variations_at_infinity(&chain, true);
    if positive != m {
        return Err(EcsError::SpectrumStructure(format!(
            "{p} has {} nonpositive roots",
            m - positive
        )));
    }

    // Cauchy bound rounded up to a power of two.
    let lead = p.leading().abs() as f64;
    let bound = 1.0
        + p.coefficients()[..m]
            .iter()
            .map(|&c| c.abs() as f64 / lead)
            .fold(0.0, f64::max);
    let mut hi = 1.0f64;
    while hi < bound {
        hi *= 2.0;
    }

    let mut isolated = Vec::with_capacity(m);
    let mut stack = vec![(0.0f64, hi)];
    while let Some((a, b)) = stack.pop() {
        let count = variations(&chain, &dyadic(a)) - variations(&chain, &dyadic(b));
        match count {
            0 => {}
            1 => isolated.push((a, b)),
            _ => {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    return Err(EcsError::SpectrumStructure(format!(
                        "roots of {p} closer than f64 resolution near {a}"
                    )));
                }
                stack.push((mid, b));
                stack.push((a, mid));
            }
        }
    }
    isolated.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut brackets = Vec::with_capacity(m);
    for (a, b) in isolated {
        brackets.push(refine(p, a, b, tol)?);
    }
    let values: Vec<f64> = brackets.iter().map(RootBracket::midpoint).collect();
    for &v in &values {
        if (v - 1.0).abs() <= gap {
            return Err(EcsError::UnitRoot { root: v, gap });
        }
    }
    let spectrum = Spectrum::positive(values, gap)?;
    Ok(RootIsolation { spectrum, brackets })
}

fn refine(p: &GlzPolynomial, mut a: f64, mut b: f64, tol: f64) -> Result<RootBracket> {
    // The interval counts roots in (a, b]; b is never a root because the only
    // possible rational roots of a GL polynomial are ±1.
    let sb = exact_sign(p, b);
    let mut sa = exact_sign(p, a);
    if sa == 0 {
        // Unreachable for GL polynomials: P(0) = ±1.
        return Err(EcsError::SpectrumStructure(format!("exact root at {a}")));
    }
    if sa * sb >= 0 {
        return Err(EcsError::SpectrumStructure(format!(
            "no sign change on ({a}, {b})"
        )));
    }
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let sm = exact_sign(p, mid);
        if sm == 0 {
            return Err(EcsError::SpectrumStructure(format!("exact root at {mid}")));
        }
        if sm == sa {
            a = mid;
            sa = sm;
        } else {
            b = mid;
        }
    }
    Ok(RootBracket {
        lower: a,
        upper: b,
        witness: (sa, sb),
    })
}

fn dyadic(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite endpoint")
}

pub(crate) fn exact_sign(p: &GlzPolynomial, x: f64) -> i32 {
    let v = p.eval_rational(&dyadic(x));
    if v.is_positive() {
        1
    } else if v.is_negative() {
        -1
    } else {
        0
    }
}

fn sturm_chain(p: &RatPoly) -> Vec<RatPoly> {
    let mut chain = vec![p.clone(), p.derivative()];
    loop {
        let n = chain.len();
        if chain[n - 1].is_zero() {
            chain.pop();
            break;
        }
        let r = chain[n - 2].rem(&chain[n - 1]).neg();
        if r.is_zero() {
            break;
        }
        chain.push(r);
    }
    chain
}

fn count_changes(signs: impl Iterator<Item = i32>) -> usize {
    let mut last = 0;
    let mut changes = 0;
    for s in signs.filter(|&s| s != 0) {
        if last != 0 && s != last {
            changes += 1;
        }
        last = s;
    }
    changes
}

fn variations(chain: &[RatPoly], x: &BigRational) -> usize {
    count_changes(chain.iter().map(|q| {
        let v = q.eval(x);
        if v.is_positive() {
            1
        } else if v.is_negative() {
            -1
        } else {
            0
        }
    }))
}

fn variations_at_infinity(chain: &[RatPoly], positive: bool) -> usize {
    count_changes(chain.iter().map(|q| {
        let d = q.degree().unwrap_or(0);
        let lead = q.0.last().cloned().unwrap_or_else(BigRational::one);
        let mut s = if lead.is_positive() { 1 } else { -1 };
        if !positive && d % 2 == 1 {
            s = -s;
        }
        s
    }))
}

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{EcsError, Result};

/// One harmonic `cos·cos(2πkt/p) + sin·sin(2πkt/p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm {
    pub k: u32,
    pub cos: f64,
    pub sin: f64,
}

/// Smooth `p`-periodic function given by a finite Fourier series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicProfile {
    pub period: f64,
    pub mean: f64,
    pub terms: Vec<FourierTerm>,
}

impl PeriodicProfile {
    pub fn new(period: f64, mean: f64, terms: Vec<FourierTerm>) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(EcsError::ParameterDomain(format!(
                "period {period} is not positive"
            )));
        }
        if let Some(t) = terms.iter().find(|t| t.k == 0) {
            return Err(EcsError::ParameterDomain(format!(
                "harmonic index 0 is reserved for the mean (got cos {}, sin {})",
                t.cos, t.sin
            )));
        }
        if !mean.is_finite() || terms.iter().any(|t| !(t.cos.is_finite() && t.sin.is_finite())) {
            return Err(EcsError::ParameterDomain("non-finite Fourier data".into()));
        }
        Ok(PeriodicProfile {
            period,
            mean,
            terms,
        })
    }

    pub fn constant(period: f64, mean: f64) -> Result<Self> {
        PeriodicProfile::new(period, mean, Vec::new())
    }

    /// `h + ε cos(2πt/p)`.
    pub fn cosine(period: f64, mean: f64, amplitude: f64) -> Result<Self> {
        PeriodicProfile::new(
            period,
            mean,
            vec![FourierTerm {
                k: 1,
                cos: amplitude,
                sin: 0.0,
            }],
        )
    }

    pub fn is_nonconstant(&self) -> bool {
        self.terms.iter().any(|t| t.cos != 0.0 || t.sin != 0.0)
    }

    pub fn require_nonconstant(&self) -> Result<()> {
        if self.is_nonconstant() {
            Ok(())
        } else {
            Err(EcsError::ConstantProfile)
        }
    }

    fn omega(&self, k: u32) -> f64 {
        2.0 * PI * k as f64 / self.period
    }

    pub fn value(&self, t: f64) -> f64 {
        self.mean
            + self
                .terms
                .iter()
                .map(|h| {
                    let (s, c) = (self.omega(h.k) * t).sin_cos();
                    h.cos * c + h.sin * s
                })
                .sum::<f64>()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|h| {
                let w = self.omega(h.k);
                let (s, c) = (w * t).sin_cos();
                w * (h.sin * c - h.cos * s)
            })
            .sum()
    }

    pub fn second_derivative(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|h| {
                let w = self.omega(h.k);
                let (s, c) = (w * t).sin_cos();
                -w * w * (h.cos * c + h.sin * s)
            })
            .sum()
    }

    /// `∫₀ᵖ f`.
    pub fn integral_over_period(&self) -> f64 {
        self.mean * self.period
    }

    pub fn with_mean(&self, mean: f64) -> Self {
        PeriodicProfile {
            mean,
            ..self.clone()
        }
    }

    /// Termwise sum; both profiles must share the period.
    pub fn add(&self, other: &PeriodicProfile) -> Result<Self> {
        if self.period != other.period {
            return Err(EcsError::ModelMismatch(format!(
                "periods {} and {} differ",
                self.period, other.period
            )));
        }
        let mut terms = self.terms.clone();
        for t in &other.terms {
            match terms.iter_mut().find(|s| s.k == t.k) {
                Some(s) => {
                    s.cos += t.cos;
                    s.sin += t.sin;
                }
                None => terms.push(*t),
            }
        }
        terms.sort_by_key(|t| t.k);
        Ok(PeriodicProfile {
            period: self.period,
            mean: self.mean + other.mean,
            terms,
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        PeriodicProfile {
            period: self.period,
            mean: self.mean * factor,
            terms: self
                .terms
                .iter()
                .map(|t| FourierTerm {
                    k: t.k,
                    cos: t.cos * factor,
                    sin: t.sin * factor,
                })
                .collect(),
        }
    }

    /// `L²(0,p)` distance, by Parseval.
    pub fn l2_distance(&self, other: &PeriodicProfile) -> Result<f64> {
        let diff = self.add(&other.scaled(-1.0))?;
        let power = diff.mean * diff.mean
            + 0.5
                * diff
                    .terms
                    .iter()
                    .map(|t| t.cos * t.cos + t.sin * t.sin)
                    .sum::<f64>();
        Ok((self.period * power).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PeriodicProfile {
        PeriodicProfile::new(
            2.0,
            0.7,
            vec![
                FourierTerm { k: 1, cos: 0.05, sin: -0.02 },
                FourierTerm { k: 3, cos: 0.0, sin: 0.01 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn periodic_and_derivatives_match_differences() {
        let f = sample();
        for &t in &[0.0, 0.3, 1.7, -2.4] {
            assert!((f.value(t) - f.value(t + 2.0)).abs() < 1e-14);
            let h = 1e-5;
            let fd = (f.value(t + h) - f.value(t - h)) / (2.0 * h);
            assert!((fd - f.derivative(t)).abs() < 1e-9);
            let fd2 = (f.derivative(t + h) - f.derivative(t - h)) / (2.0 * h);
            assert!((fd2 - f.second_derivative(t)).abs() < 1e-8);
        }
    }

    #[test]
    fn mean_is_period_average() {
        let f = sample();
        let n = 4000;
        let avg: f64 = (0..n).map(|j| f.value(2.0 * j as f64 / n as f64)).sum::<f64>() / n as f64;
        assert!((avg - 0.7).abs() < 1e-12);
        assert_eq!(f.integral_over_period(), 1.4);
    }

    #[test]
    fn nonconstant_flag() {
        assert!(sample().is_nonconstant());
        assert!(!PeriodicProfile::constant(1.0, 0.3).unwrap().is_nonconstant());
        assert!(!PeriodicProfile::cosine(1.0, 0.3, 0.0).unwrap().is_nonconstant());
        assert_eq!(
            PeriodicProfile::constant(1.0, 0.3).unwrap().require_nonconstant(),
            Err(EcsError::ConstantProfile)
        );
    }

    #[test]
    fn l2_distance_matches_quadrature() {
        let f = sample();
        let g = PeriodicProfile::cosine(2.0, 0.6, 0.1).unwrap();
        let n = 20000;
        let h = 2.0 / n as f64;
        let q: f64 = (0..n).map(|j| (f.value(j as f64 * h) - g.value(j as f64 * h)).powi(2)).sum::<f64>() * h;
        assert!((f.l2_distance(&g).unwrap() - q.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(PeriodicProfile::constant(0.0, 1.0).is_err());
        assert!(PeriodicProfile::new(1.0, 0.0, vec![FourierTerm { k: 0, cos: 1.0, sin: 0.0 }]).is_err());
    }
}

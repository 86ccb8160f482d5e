use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{EcsError, Result};
use crate::profile::PeriodicProfile;
use crate::spectral::{DiagonalCurve, TracelessDiag};

/// Signs `εᵢ = ±1` of the diagonal inner product `⟨x,y⟩ = Σ εᵢ xᵢ yᵢ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Signature(Vec<i8>);

impl Signature {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.is_empty() || signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(EcsError::ParameterDomain(format!(
                "signature entries must be +1 or -1, got {signs:?}"
            )));
        }
        Ok(Signature(signs))
    }

    pub fn euclidean(m: usize) -> Self {
        Signature(vec![1; m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sign(&self, i: usize) -> f64 {
        self.0[i] as f64
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x.iter().zip(y))
            .map(|(&e, (a, b))| e as f64 * a * b)
            .sum()
    }
}

impl FromStr for Signature {
    type Err = EcsError;

    fn from_str(s: &str) -> Result<Self> {
        let signs = s
            .chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => Err(EcsError::ParameterDomain(format!(
                    "signature character {other:?} is not + or -"
                ))),
            })
            .collect::<Result<Vec<i8>>>()?;
        Signature::new(signs)
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            f.write_str(if s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl Serialize for Signature {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Signature {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// One model manifold: dimension `n = m + 2`, period, inner product, `f`,
/// `A`, and optionally the Riccati curve `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelData {
    pub n: usize,
    pub p: f64,
    pub signature: Signature,
    pub f: PeriodicProfile,
    pub a: TracelessDiag,
    pub b: Option<DiagonalCurve>,
}

impl ModelData {
    pub fn new(
        signature: Signature,
        f: PeriodicProfile,
        a: TracelessDiag,
        b: Option<DiagonalCurve>,
    ) -> Result<Self> {
        let data = ModelData::unchecked(signature, f, a, b)?;
        if data.n < 5 {
            return Err(EcsError::ParameterDomain(format!(
                "n >= 5 fails for n = {}",
                data.n
            )));
        }
        data.f.require_nonconstant()?;
        data.a.require_nonzero()?;
        Ok(data)
    }

    /// Shape checks only. Admits constant `f`, zero `A` and small `n`, for
    /// closed-form comparisons.
    pub fn unchecked(
        signature: Signature,
        f: PeriodicProfile,
        a: TracelessDiag,
        b: Option<DiagonalCurve>,
    ) -> Result<Self> {
        let m = signature.len();
        if a.len() != m {
            return Err(EcsError::ModelMismatch(format!(
                "A has {} entries for a signature of length {m}",
                a.len()
            )));
        }
        if let Some(b) = &b {
            if b.channels() != m || b.period() != f.period {
                return Err(EcsError::ModelMismatch(format!(
                    "B has {} channels and period {}, model has {m} and {}",
                    b.channels(),
                    b.period(),
                    f.period
                )));
            }
        }
        Ok(ModelData {
            n: m + 2,
            p: f.period,
            signature,
            f,
            a,
            b,
        })
    }

    pub fn m(&self) -> usize {
        self.n - 2
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        self.signature.inner(x, y)
    }

    /// `κ = f(t)⟨v,v⟩ + ⟨Av,v⟩`.
    pub fn kappa(&self, t: f64, v: &[f64]) -> f64 {
        let ft = self.f.value(t);
        (0..self.m())
            .map(|i| self.signature.sign(i) * (ft + self.a.entries()[i]) * v[i] * v[i])
            .sum()
    }

    pub fn curve(&self) -> Result<&DiagonalCurve> {
        self.b
            .as_ref()
            .ok_or_else(|| EcsError::ModelMismatch("model has no Riccati curve B".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signature_parsing() {
        let s: Signature = "+-+".parse().unwrap();
        assert_eq!(s.signs(), &[1, -1, 1]);
        assert_eq!(s.to_string(), "+-+");
        assert_eq!(s.inner(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]), 2.0);
        assert!("+x".parse::<Signature>().is_err());
        assert!("".parse::<Signature>().is_err());
    }

    #[test]
    fn model_gates() {
        let a = TracelessDiag::new(vec![-0.25, -0.25, 0.5]).unwrap();
        let f = PeriodicProfile::cosine(1.0, 0.7, 0.05).unwrap();
        assert!(ModelData::new(Signature::euclidean(3), f.clone(), a.clone(), None).is_ok());
        let flat = PeriodicProfile::constant(1.0, 0.7).unwrap();
        assert_eq!(
            ModelData::new(Signature::euclidean(3), flat, a.clone(), None).unwrap_err(),
            EcsError::ConstantProfile
        );
        let a2 = TracelessDiag::new(vec![-0.5, 0.5]).unwrap();
        assert!(matches!(
            ModelData::new(Signature::euclidean(2), f, a2, None),
            Err(EcsError::ParameterDomain(_))
        ));
    }

    #[test]
    fn kappa_example() {
        let a = TracelessDiag::new(vec![-0.2422, -0.2422, 0.4844]).unwrap();
        let f = PeriodicProfile::cosine(1.0, 0.7226, 0.05).unwrap();
        let d = ModelData::new(Signature::euclidean(3), f, a, None).unwrap();
        assert!((d.kappa(0.0, &[1.0, 0.0, 0.0]) - 0.5304).abs() < 1e-12);
        assert_eq!(d.kappa(0.3, &[0.0; 3]), 0.0);
    }
}

use std::thread;

use serde::{Deserialize, Serialize};

use super::{certify, Certificate, Inputs, VerificationConfig};
use crate::error::{EcsError, Result};
use crate::profile::PeriodicProfile;

/// Fourier perturbations of a base certificate's `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Path of the base certificate.
    pub base: String,
    /// Each direction must have zero mean and the base period.
    pub directions: Vec<PeriodicProfile>,
    pub amplitudes: Vec<f64>,
    /// Sample counts for the cells; the base certificate's when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationConfig>,
}

impl SweepSpec {
    pub fn validate(&self, period: f64) -> Result<()> {
        for (i, d) in self.directions.iter().enumerate() {
            if d.mean != 0.0 {
                return Err(EcsError::ParameterDomain(format!(
                    "direction {i} has mean {}; perturbations must have zero mean",
                    d.mean
                )));
            }
            if d.period != period {
                return Err(EcsError::ParameterDomain(format!(
                    "direction {i} has period {} but the base has {period}",
                    d.period
                )));
            }
            d.require_nonconstant()?;
        }
        if let Some(a) = self.amplitudes.iter().find(|a| !a.is_finite()) {
            return Err(EcsError::ParameterDomain(format!("amplitude {a} is not finite")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub direction: usize,
    pub amplitude: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
    /// Pairwise `L²` distances between the calibrated `f` of each cell;
    /// `None` where a cell has no certificate.
    pub distances: Vec<Vec<Option<f64>>>,
}

impl SweepResult {
    pub fn passing(&self) -> usize {
        self.cells.iter().filter(|c| c.pass).count()
    }
}

fn run_cell(base: &Certificate, direction: usize, dir: &PeriodicProfile, amplitude: f64, cfg: &VerificationConfig) -> SweepCell {
    // Amplitude zero reuses the base profile verbatim so the cell reproduces it.
    let f_initial = if amplitude == 0.0 {
        Ok(base.inputs.f_initial.clone())
    } else {
        base.inputs.f_initial.add(&dir.scaled(amplitude))
    };
    let outcome = f_initial.and_then(|f| {
        let inputs = Inputs {
            f_initial: f,
            ..base.inputs.clone()
        };
        certify(inputs, cfg, &base.tolerances)
    });
    match outcome {
        Ok(built) => SweepCell {
            direction,
            amplitude,
            pass: built.certificate.pass,
            error: None,
            certificate: Some(built.certificate),
        },
        Err(e) => SweepCell {
            direction,
            amplitude,
            pass: false,
            error: Some(e.to_string()),
            certificate: None,
        },
    }
}

/// Re-calibrates and certifies every (direction, amplitude) cell. Cells run
/// in parallel; a failing cell is recorded and the sweep continues.
pub fn sweep(base: &Certificate, spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate(base.inputs.p)?;
    if !base.pass {
        return Err(EcsError::ParameterDomain("the base certificate does not pass".into()));
    }
    let cfg = spec.verification.unwrap_or(base.verification);
    let jobs: Vec<(usize, f64)> = (0..spec.directions.len())
        .flat_map(|d| spec.amplitudes.iter().map(move |&a| (d, a)))
        .collect();
    let cells: Vec<SweepCell> = thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(d, a)| {
                let dir = &spec.directions[d];
                let cfg = &cfg;
                scope.spawn(move || run_cell(base, d, dir, a, cfg))
            })
            .collect();
        handles
            .into_iter()
            .zip(&jobs)
            .map(|(h, &(d, a))| {
                h.join().unwrap_or_else(|_| SweepCell {
                    direction: d,
                    amplitude: a,
                    pass: false,
                    error: Some("cell panicked".into()),
                    certificate: None,
                })
            })
            .collect()
    });
    let profiles: Vec<Option<&PeriodicProfile>> = cells
        .iter()
        .map(|c| c.certificate.as_ref().map(|cert| &cert.artifacts.f))
        .collect();
    let distances = profiles
        .iter()
        .map(|a| {
            profiles
                .iter()
                .map(|b| match (a, b) {
                    (Some(a), Some(b)) => a.l2_distance(b).ok(),
                    _ => None,
                })
                .collect()
        })
        .collect();
    Ok(SweepResult { cells, distances })
}

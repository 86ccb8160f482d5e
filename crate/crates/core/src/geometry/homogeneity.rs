use serde::{Deserialize, Serialize};

use crate::error::{EcsError, Result};
use crate::profile::PeriodicProfile;

/// `|f|` below this is treated as a zero of the profile.
const ZERO_FLOOR: f64 = 1e-6;
/// Variation of the invariant above this counts as an obstruction.
const PRESENT_THRESHOLD: f64 = 1e-3;

/// The invariant `g = −½ sgn(f) ḟ |f|^{-3/2}` is constant on every interval
/// where a locally homogeneous plane wave has `f ≠ 0`. A variation of `g`
/// across such an interval rules out local homogeneity there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstruction {
    pub present: bool,
    /// Largest `max g − min g` over the sampled intervals.
    pub variation: f64,
    pub threshold: f64,
    /// Start and end of the interval attaining the variation.
    pub interval: (f64, f64),
    pub samples: usize,
}

pub fn invariant(f: f64, fdot: f64) -> f64 {
    -0.5 * f.signum() * fdot * f.abs().powf(-1.5)
}

pub fn homogeneity_obstruction(profile: &PeriodicProfile, samples: usize) -> Result<Obstruction> {
    profile.require_nonconstant()?;
    homogeneity_obstruction_on(
        |t| profile.value(t),
        |t| profile.derivative(t),
        0.0,
        profile.period,
        samples,
    )
}

/// Samples `[lo, hi]`, splits it into runs where `|f| > 10⁻⁶` and takes the
/// largest variation of the invariant over a run.
pub fn homogeneity_obstruction_on(
    f: impl Fn(f64) -> f64,
    fdot: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    samples: usize,
) -> Result<Obstruction> {
    if samples < 2 || !(hi > lo) {
        return Err(EcsError::ParameterDomain(format!(
            "need at least 2 samples on a nonempty interval, got {samples} on [{lo}, {hi}]"
        )));
    }
    let mut best: Option<(f64, f64, f64)> = None;
    let mut run: Option<(f64, f64, f64, f64)> = None;
    let mut close = |run: &mut Option<(f64, f64, f64, f64)>| {
        if let Some((start, end, gmin, gmax)) = run.take() {
            if end > start && best.is_none_or(|b| gmax - gmin > b.0) {
                best = Some((gmax - gmin, start, end));
            }
        }
    };
    for j in 0..samples {
        let t = lo + (hi - lo) * j as f64 / (samples - 1) as f64;
        let ft = f(t);
        if ft.abs() <= ZERO_FLOOR {
            close(&mut run);
            continue;
        }
        let g = invariant(ft, fdot(t));
        run = Some(match run {
            Some((start, _, gmin, gmax)) => (start, t, gmin.min(g), gmax.max(g)),
            None => (t, t, g, g),
        });
    }
    close(&mut run);
    let (variation, start, end) = best.ok_or_else(|| {
        EcsError::Inconclusive(format!("profile vanishes to within {ZERO_FLOOR} on [{lo}, {hi}]"))
    })?;
    Ok(Obstruction {
        present: variation > PRESENT_THRESHOLD,
        variation,
        threshold: PRESENT_THRESHOLD,
        interval: (start, end),
        samples,
    })
}

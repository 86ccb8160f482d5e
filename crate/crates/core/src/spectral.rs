//! Periodic Riccati data `Ḃ + B² = f + A` with prescribed multipliers
//! `λᵢ = exp(−∫₀ᵖ bᵢ)`.
//!
//! Channels decouple completely: channel `i` is the scalar equation
//! `ḃ = f + aᵢ − b²`. Periodic solutions are found by Newton shooting on the
//! period map, and calibration adjusts the constants `dᵢ = mean(f) + aᵢ` until
//! the multipliers hit the target.

use serde::{Deserialize, Serialize};

use crate::error::{EcsError, Result};
use crate::polynomial::Spectrum;
use crate::profile::PeriodicProfile;
use crate::report::{Check, Report};

/// `|b|` beyond this counts as finite-time escape.
pub const BLOW_UP_THRESHOLD: f64 = 1e8;
/// Newton cap for both shooting and calibration.
pub const NEWTON_CAP: usize = 50;
/// Minimum `‖A‖∞` for a usable model.
pub const A_FLOOR: f64 = 1e-8;
pub const TRACE_TOL: f64 = 1e-13;

const SHOOT_TOL: f64 = 1e-13;
const NOISE_FLOOR: f64 = 1e-11;

/// Diagonal entries of a traceless endomorphism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TracelessDiag {
    entries: Vec<f64>,
}

impl TryFrom<Vec<f64>> for TracelessDiag {
    type Error = EcsError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        TracelessDiag::new(v)
    }
}

impl From<TracelessDiag> for Vec<f64> {
    fn from(a: TracelessDiag) -> Self {
        a.entries
    }
}

impl TracelessDiag {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() || entries.iter().any(|x| !x.is_finite()) {
            return Err(EcsError::ParameterDomain(
                "traceless diagonal needs finite entries".into(),
            ));
        }
        let trace: f64 = entries.iter().sum();
        if trace.abs() > TRACE_TOL {
            return Err(EcsError::ParameterDomain(format!(
                "trace {trace:e} exceeds {TRACE_TOL:e}"
            )));
        }
        Ok(TracelessDiag { entries })
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm_inf(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn require_nonzero(&self) -> Result<()> {
        let norm = self.norm_inf();
        if norm < A_FLOOR {
            Err(EcsError::VanishingTraceless { norm })
        } else {
            Ok(())
        }
    }
}

/// Step-count policy for the fixed-step integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepPolicy {
    Fixed(usize),
    /// Double from `start` until `∫B` moves by less than `tol`.
    Auto { start: usize, tol: f64, max: usize },
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy::Auto {
            start: 256,
            tol: 1e-11,
            max: 1 << 18,
        }
    }
}

/// Periodic diagonal curve `B`, stored on a uniform grid of one period.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalCurve {
    f: PeriodicProfile,
    a: Vec<f64>,
    steps: usize,
    /// Per channel, `(bᵢ(jh), ∫₀^{jh} bᵢ)` for `j = 0..=steps`.
    nodes: Vec<Vec<[f64; 2]>>,
}

impl DiagonalCurve {
    /// `B ≡ C`, realized with forcing `f + aᵢ = cᵢ²`.
    pub fn constant(period: f64, c: &[f64], steps: usize) -> Result<Self> {
        let f = PeriodicProfile::constant(period, 0.0)?;
        let a: Vec<f64> = c.iter().map(|x| x * x).collect();
        solve_periodic_riccati(&f, &a, c, StepPolicy::Fixed(steps))
    }

    pub fn period(&self) -> f64 {
        self.f.period
    }

    pub fn channels(&self) -> usize {
        self.a.len()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// The forcing this curve solves against: `ḃᵢ + bᵢ² = f + aᵢ`.
    pub fn forcing(&self) -> (&PeriodicProfile, &[f64]) {
        (&self.f, &self.a)
    }

    pub fn initial(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n[0][0]).collect()
    }

    pub fn nodes(&self, channel: usize) -> &[[f64; 2]] {
        &self.nodes[channel]
    }

    fn h(&self) -> f64 {
        self.f.period / self.steps as f64
    }

    /// `∫₀ᵖ bᵢ` per channel.
    pub fn period_integrals(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n[self.steps][1]).collect()
    }

    /// `(bᵢ(t), ∫₀ᵗ bᵢ)` for any real `t`.
    pub fn state(&self, channel: usize, t: f64) -> (f64, f64) {
        let p = self.f.period;
        let k = (t / p).floor();
        let mut tau = t - k * p;
        if tau >= p {
            tau = 0.0;
        }
        let h = self.h();
        let j = ((tau / h).floor() as usize).min(self.steps - 1);
        let [b, int] = self.nodes[channel][j];
        let dt = tau - j as f64 * h;
        let (b, int) = if dt > 0.0 {
            self.partial_step(channel, j as f64 * h, b, int, dt)
        } else {
            (b, int)
        };
        (b, int + k * self.nodes[channel][self.steps][1])
    }

    fn partial_step(&self, i: usize, t: f64, b: f64, int: f64, dt: f64) -> (f64, f64) {
        let a = self.a[i];
        let g0 = self.f.value(t) + a;
        let gm = self.f.value(t + 0.5 * dt) + a;
        let g1 = self.f.value(t + dt) + a;
        let k1 = g0 - b * b;
        let b2 = b + 0.5 * dt * k1;
        let k2 = gm - b2 * b2;
        let b3 = b + 0.5 * dt * k2;
        let k3 = gm - b3 * b3;
        let b4 = b + dt * k3;
        let k4 = g1 - b4 * b4;
        (
            b + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4),
            int + dt / 6.0 * (b + 2.0 * b2 + 2.0 * b3 + b4),
        )
    }

    pub fn value(&self, channel: usize, t: f64) -> f64 {
        self.state(channel, t).0
    }

    pub fn values(&self, t: f64) -> Vec<f64> {
        (0..self.channels()).map(|i| self.value(i, t)).collect()
    }

    /// `∫₀ᵗ bᵢ`.
    pub fn integral(&self, channel: usize, t: f64) -> f64 {
        self.state(channel, t).1
    }

    /// `max |bᵢ(p) − bᵢ(0)|`.
    pub fn periodicity_gap(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| (n[self.steps][0] - n[0][0]).abs())
            .fold(0.0, f64::max)
    }

    /// `max |ḃ + b² − f − a|` over the grid, with `ḃ` from a five-point
    /// periodic difference of the stored samples.
    pub fn ode_residual(&self) -> f64 {
        let n = self.steps;
        let h = self.h();
        let mut worst = 0.0f64;
        for (i, nodes) in self.nodes.iter().enumerate() {
            let b = |j: isize| nodes[j.rem_euclid(n as isize) as usize][0];
            for j in 0..n as isize {
                let db = (-b(j + 2) + 8.0 * b(j + 1) - 8.0 * b(j - 1) + b(j - 2)) / (12.0 * h);
                let t = j as f64 * h;
                let r = db + b(j) * b(j) - self.f.value(t) - self.a[i];
                worst = worst.max(r.abs());
            }
        }
        worst
    }
}

/// `f` sampled at every half step of a period.
fn half_step_samples(f: &PeriodicProfile, steps: usize) -> Vec<f64> {
    let hh = f.period / (2 * steps) as f64;
    (0..=2 * steps).map(|j| f.value(j as f64 * hh)).collect()
}

/// One period of `(b, ∫b)` from `b0` under forcing `fs + a`.
fn period_map(
    fs: &[f64],
    a: f64,
    h: f64,
    b0: f64,
    channel: usize,
    mut record: Option<&mut Vec<[f64; 2]>>,
) -> Result<(f64, f64)> {
    let n = (fs.len() - 1) / 2;
    let mut b = b0;
    let mut int = 0.0;
    if let Some(r) = record.as_deref_mut() {
        r.clear();
        r.push([b, 0.0]);
    }
    for j in 0..n {
        let g0 = fs[2 * j] + a;
        let gm = fs[2 * j + 1] + a;
        let g1 = fs[2 * j + 2] + a;
        let k1 = g0 - b * b;
        let b2 = b + 0.5 * h * k1;
        let k2 = gm - b2 * b2;
        let b3 = b + 0.5 * h * k2;
        let k3 = gm - b3 * b3;
        let b4 = b + h * k3;
        let k4 = g1 - b4 * b4;
        int += h / 6.0 * (b + 2.0 * b2 + 2.0 * b3 + b4);
        b += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !b.is_finite() || b.abs() > BLOW_UP_THRESHOLD {
            return Err(EcsError::BlowUp {
                channel,
                time: (j + 1) as f64 * h,
            });
        }
        if let Some(r) = record.as_deref_mut() {
            r.push([b, int]);
        }
    }
    Ok((b, int))
}

/// Newton shooting for the periodic solution of one channel; returns
/// `(b(0), ∫₀ᵖ b)`.
fn periodic_channel(fs: &[f64], a: f64, h: f64, init: f64, channel: usize) -> Result<(f64, f64)> {
    let mut b0 = init;
    let (bp, mut int) = period_map(fs, a, h, b0, channel, None)?;
    let mut g = bp - b0;
    for it in 0..NEWTON_CAP {
        if g.abs() <= SHOOT_TOL * (1.0 + b0.abs()) {
            return Ok((b0, int));
        }
        // dΦ/db₀ = exp(−2∫b) from the variational equation y' = −2by.
        let dg = (-2.0 * int).exp() - 1.0;
        let mut step = -g / dg;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = b0 + step;
            if let Ok((bp, int_t)) = period_map(fs, a, h, trial, channel, None) {
                if (bp - trial).abs() < g.abs() {
                    b0 = trial;
                    g = bp - trial;
                    int = int_t;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            if g.abs() <= NOISE_FLOOR * (1.0 + b0.abs()) {
                return Ok((b0, int));
            }
            return Err(EcsError::Convergence {
                iterations: it + 1,
                residual: g.abs(),
            });
        }
    }
    if g.abs() <= NOISE_FLOOR * (1.0 + b0.abs()) {
        return Ok((b0, int));
    }
    Err(EcsError::Convergence {
        iterations: NEWTON_CAP,
        residual: g.abs(),
    })
}

fn solve_fixed(f: &PeriodicProfile, a: &[f64], init: &[f64], steps: usize) -> Result<DiagonalCurve> {
    let fs = half_step_samples(f, steps);
    let h = f.period / steps as f64;
    let mut nodes = Vec::with_capacity(a.len());
    for (i, (&ai, &bi)) in a.iter().zip(init).enumerate() {
        let (b0, _) = periodic_channel(&fs, ai, h, bi, i)?;
        let mut rec = Vec::with_capacity(steps + 1);
        period_map(&fs, ai, h, b0, i, Some(&mut rec))?;
        nodes.push(rec);
    }
    Ok(DiagonalCurve {
        f: f.clone(),
        a: a.to_vec(),
        steps,
        nodes,
    })
}

/// Periodic solution of `ḃᵢ + bᵢ² = f + aᵢ` near `init`, channel by channel.
pub fn solve_periodic_riccati(
    f: &PeriodicProfile,
    a: &[f64],
    init: &[f64],
    policy: StepPolicy,
) -> Result<DiagonalCurve> {
    if a.len() != init.len() || a.is_empty() {
        return Err(EcsError::ParameterDomain(format!(
            "{} constants but {} initial values",
            a.len(),
            init.len()
        )));
    }
    match policy {
        StepPolicy::Fixed(n) => solve_fixed(f, a, init, n.max(1)),
        StepPolicy::Auto { start, tol, max } => {
            let mut n = start.max(2);
            let mut coarse = solve_fixed(f, a, init, n)?;
            loop {
                n *= 2;
                if n > max {
                    return Err(EcsError::IntegratorAccuracy(format!(
                        "step doubling did not settle within {max} steps"
                    )));
                }
                let fine = solve_fixed(f, a, &coarse.initial(), n)?;
                let change = coarse
                    .period_integrals()
                    .iter()
                    .zip(fine.period_integrals())
                    .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
                if change < tol {
                    return Ok(fine);
                }
                coarse = fine;
            }
        }
    }
}

/// `exp(−∫₀ᵖ bᵢ)` in channel order.
pub fn multipliers(b: &DiagonalCurve) -> Vec<f64> {
    b.period_integrals().iter().map(|x| (-x).exp()).collect()
}

/// Sorted multipliers of `B`.
pub fn spectrum_of(b: &DiagonalCurve) -> Spectrum {
    Spectrum::measured(multipliers(b))
}

/// Constant solution `B ≡ C` of the target, with `C² = h + A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Seed {
    pub c: Vec<f64>,
    pub h: f64,
    pub a: TracelessDiag,
}

pub fn seed_constant(target: &Spectrum, p: f64) -> Result<Seed> {
    if !(p.is_finite() && p > 0.0) {
        return Err(EcsError::ParameterDomain(format!("period {p} is not positive")));
    }
    if !target.moduli_not_all_equal() {
        return Err(EcsError::DegenerateSpectrum(format!(
            "|log λ| equal for all of {:?}",
            target.values()
        )));
    }
    let c: Vec<f64> = target.values().iter().map(|l| -l.ln() / p).collect();
    let sq: Vec<f64> = c.iter().map(|x| x * x).collect();
    let h = sq.iter().sum::<f64>() / sq.len() as f64;
    let a = TracelessDiag::new(sq.iter().map(|x| x - h).collect())?;
    a.require_nonzero()?;
    Ok(Seed { c, h, a })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    /// Required per-entry agreement of the achieved multipliers.
    pub tol: f64,
    pub max_iter: usize,
    pub fd_step: f64,
    pub policy: StepPolicy,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            tol: 1e-9,
            max_iter: NEWTON_CAP,
            fd_step: 1e-6,
            policy: StepPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub spectrum_error: f64,
    pub ode_residual: f64,
    pub periodicity_gap: f64,
    pub newton_iterations: Vec<usize>,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSolution {
    pub f: PeriodicProfile,
    pub a: TracelessDiag,
    pub b: DiagonalCurve,
    pub achieved: Spectrum,
    pub residual: ResidualReport,
}

/// Adjusts the mean of `f` and the traceless `A` so that the periodic
/// solution realizes `target`. Works on `dᵢ = mean(f) + aᵢ`, one scalar
/// Newton iteration per channel, starting from the constant-seed derivative
/// `d(∫bᵢ)/d dᵢ = p/(2cᵢ)` and refining with central differences.
pub fn calibrate(
    f: &PeriodicProfile,
    target: &Spectrum,
    seed: &Seed,
    opts: &CalibrationOptions,
) -> Result<SpectralSolution> {
    f.require_nonconstant()?;
    let m = target.len();
    if seed.c.len() != m {
        return Err(EcsError::ParameterDomain(format!(
            "seed has {} channels, target {}",
            seed.c.len(),
            m
        )));
    }
    let p = f.period;
    let basin = |e: EcsError| match e {
        EcsError::BlowUp { .. } | EcsError::Convergence { .. } => EcsError::Basin(e.to_string()),
        other => other,
    };
    let f0 = f.with_mean(0.0);
    let mut d: Vec<f64> = seed.c.iter().map(|c| c * c).collect();
    let start = solve_periodic_riccati(&f0, &d, &seed.c, opts.policy).map_err(basin)?;
    let steps = start.steps();
    let fs = half_step_samples(&f0, steps);
    let h = p / steps as f64;
    let mut b0 = start.initial();
    let goal: Vec<f64> = target.values().iter().map(|l| -l.ln()).collect();
    let mut iterations = vec![0; m];

    for i in 0..m {
        let integral = |di: f64, init: f64| periodic_channel(&fs, di, h, init, i);
        let mut r = integral(d[i], b0[i]).map_err(basin)?.1 - goal[i];
        let mut jac = p / (2.0 * seed.c[i]);
        let mut history = vec![r.abs()];
        let tol = 1e-13 * goal[i].abs().max(1.0);
        let mut it = 0;
        while r.abs() > tol {
            if it == opts.max_iter {
                return Err(EcsError::Calibration { history });
            }
            it += 1;
            let mut step = -r / jac;
            let mut accepted = false;
            for _ in 0..30 {
                let trial = d[i] + step;
                if let Ok((bt, int)) = integral(trial, b0[i]) {
                    let rt = int - goal[i];
                    if rt.abs() < r.abs() {
                        d[i] = trial;
                        b0[i] = bt;
                        r = rt;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            history.push(r.abs());
            if !accepted {
                if r.abs() < 1e-10 {
                    break;
                }
                return Err(EcsError::Calibration { history });
            }
            let delta = opts.fd_step * d[i].abs().max(1e-3);
            let plus = integral(d[i] + delta, b0[i]).map_err(basin)?.1;
            let minus = integral(d[i] - delta, b0[i]).map_err(basin)?.1;
            let fd = (plus - minus) / (2.0 * delta);
            if fd.is_finite() && fd != 0.0 {
                jac = fd;
            }
        }
        iterations[i] = it;
    }

    let hmean = d.iter().sum::<f64>() / m as f64;
    let a = TracelessDiag::new(d.iter().map(|x| x - hmean).collect())?;
    a.require_nonzero()?;
    let f_final = f.with_mean(hmean);
    let b = solve_periodic_riccati(&f_final, a.entries(), &b0, opts.policy).map_err(basin)?;
    let achieved = spectrum_of(&b);
    let spectrum_error = achieved.max_abs_diff(target);
    if !(spectrum_error < opts.tol) {
        return Err(EcsError::Calibration {
            history: vec![spectrum_error],
        });
    }
    let residual = ResidualReport {
        spectrum_error,
        ode_residual: b.ode_residual(),
        periodicity_gap: b.periodicity_gap(),
        newton_iterations: iterations,
        steps: b.steps(),
    };
    Ok(SpectralSolution {
        f: f_final,
        a,
        b,
        achieved,
        residual,
    })
}

/// Pairs with `λᵢ ∈ {λⱼ, 1/λⱼ}` must have `aᵢ = aⱼ`, and the moduli
/// `|log λᵢ|` must not all agree.
pub fn necessity_check(solution: &SpectralSolution) -> Report {
    necessity_check_parts(solution.a.entries(), &multipliers(&solution.b), 1e-8)
}

pub fn necessity_check_parts(a: &[f64], lambda: &[f64], tol: f64) -> Report {
    let mut report = Report::new();
    let close = |x: f64, y: f64| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0);
    let mut pairs = 0;
    for i in 0..lambda.len() {
        for j in i + 1..lambda.len() {
            if close(lambda[i], lambda[j]) || close(lambda[i], 1.0 / lambda[j]) {
                pairs += 1;
                report.push(Check::below(
                    format!("a[{i}] = a[{j}]"),
                    (a[i] - a[j]).abs(),
                    tol,
                ));
            }
        }
    }
    if pairs == 0 {
        report.note("no repeated or reciprocal multipliers");
    }
    let logs: Vec<f64> = lambda.iter().map(|l| l.ln().abs()).collect();
    let spread = logs.iter().cloned().fold(f64::MIN, f64::max) - logs.iter().cloned().fold(f64::MAX, f64::min);
    report.push(Check::above("moduli |log λ| not all equal", spread, tol));
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn target() -> Spectrum {
        Spectrum::new(vec![2.0, 0.5, 3.0], 1e-9).unwrap()
    }

    #[test]
    fn seed_arithmetic() {
        let s = seed_constant(&target(), 1.0).unwrap();
        // Sorted target [0.5, 2, 3].
        let l2 = 2f64.ln();
        let l3 = 3f64.ln();
        assert!((s.c[0] - l2).abs() < 1e-15);
        assert!((s.c[1] + l2).abs() < 1e-15);
        assert!((s.c[2] + l3).abs() < 1e-15);
        let h = (2.0 * l2 * l2 + l3 * l3) / 3.0;
        assert!((s.h - h).abs() < 1e-15);
        assert!((s.h - 0.7226183).abs() < 1e-7);
        assert!((s.a.entries()[0] + 0.2421653).abs() < 1e-7);
        assert!((s.a.entries()[2] - 0.4843306).abs() < 1e-7);
        assert!(s.a.entries().iter().sum::<f64>().abs() < 1e-13);
    }

    #[test]
    fn seed_rejects_degenerate() {
        let pair = Spectrum::measured(vec![4.0, 0.25]);
        assert!(matches!(seed_constant(&pair, 1.0), Err(EcsError::DegenerateSpectrum(_))));
        let e = std::f64::consts::E;
        let repeated = Spectrum::measured(vec![e, e, 1.0 / e]);
        assert!(matches!(seed_constant(&repeated, 1.0), Err(EcsError::DegenerateSpectrum(_))));
    }

    #[test]
    fn constant_forcing_gives_constant_curve() {
        let s = seed_constant(&target(), 1.0).unwrap();
        let f = PeriodicProfile::constant(1.0, s.h).unwrap();
        let b = solve_periodic_riccati(&f, s.a.entries(), &s.c, StepPolicy::Fixed(64)).unwrap();
        for i in 0..3 {
            for &t in &[0.0, 0.37, 0.99, 5.5] {
                assert!((b.value(i, t) - s.c[i]).abs() < 1e-14);
            }
        }
        let sp = spectrum_of(&b);
        for (x, y) in sp.values().iter().zip([0.5, 2.0, 3.0]) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_curve_has_unit_multipliers() {
        let z = DiagonalCurve::constant(1.0, &[0.0, 0.0], 16).unwrap();
        assert_eq!(multipliers(&z), vec![1.0, 1.0]);
    }

    #[test]
    fn huge_forcing_fails() {
        let s = seed_constant(&target(), 1.0).unwrap();
        let f = PeriodicProfile::cosine(1.0, s.h, 1e6).unwrap();
        let r = solve_periodic_riccati(&f, s.a.entries(), &s.c, StepPolicy::Fixed(2048));
        assert!(matches!(r, Err(EcsError::BlowUp { .. }) | Err(EcsError::Convergence { .. })));
    }

    #[test]
    fn calibration_rejects_constant_profile() {
        let s = seed_constant(&target(), 1.0).unwrap();
        let f = PeriodicProfile::cosine(1.0, s.h, 0.0).unwrap();
        assert_eq!(
            calibrate(&f, &target(), &s, &CalibrationOptions::default()).unwrap_err(),
            EcsError::ConstantProfile
        );
    }

    #[test]
    fn necessity_flags_violation() {
        let ok = necessity_check_parts(&[0.1, 0.1, -0.2], &[2.0, 0.5, 3.0], 1e-8);
        assert!(ok.passed());
        let bad = necessity_check_parts(&[0.1, -0.1, 0.0], &[2.0, 2.0, 3.0], 1e-8);
        assert!(!bad.passed());
        let vacuous = necessity_check_parts(&[0.1, -0.3, 0.2], &[0.2, 1.5, 3.2], 1e-8);
        assert!(vacuous.passed());
        assert_eq!(vacuous.checks.len(), 1);
    }

    #[test]
    fn traceless_guard() {
        assert!(TracelessDiag::new(vec![0.1, 0.2]).is_err());
        assert!(matches!(
            TracelessDiag::new(vec![1e-10, -1e-10]).unwrap().require_nonzero(),
            Err(EcsError::VanishingTraceless { .. })
        ));
    }
}

use std::io::Write;

use super::{christoffel_at, ManifoldPoint};
use crate::error::{EcsError, Result};
use crate::integrate::Dopri5;
use crate::ode::{adj2, mul2, Mat2, Model};

#[derive(Debug, Clone, Copy)]
pub struct GeodesicOptions {
    /// RK4 steps per unit of `t` travelled, per period, for the `xⁿ` quadrature.
    pub steps_per_period: usize,
    /// Output samples on each side of `σ = 0`.
    pub samples: usize,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        GeodesicOptions {
            steps_per_period: 512,
            samples: 50,
        }
    }
}

/// Samples of `(x, ẋ)` in chart coordinates along an affinely parametrized
/// geodesic, together with `g(γ̇, γ̇)` and the scale of its terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub sigma: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub energy: Vec<f64>,
    pub energy_scale: Vec<f64>,
}

impl Trajectory {
    /// `max |g(γ̇,γ̇)(σ) − g(γ̇,γ̇)(0)| / max(1, Σ|terms|)`. The terms of
    /// `κc² + 2cẋⁿ + ⟨v̇,v̇⟩` grow exponentially while their sum is constant, so
    /// drift is measured against their size.
    pub fn energy_drift(&self) -> f64 {
        let zero = self
            .sigma
            .iter()
            .position(|&s| s == 0.0)
            .unwrap_or(0);
        let e0 = self.energy[zero];
        self.energy
            .iter()
            .zip(&self.energy_scale)
            .fold(0.0, |m, (e, s)| m.max((e - e0).abs() / s.max(1.0)))
    }

    /// `max_j ‖xⱼ − yⱼ‖∞ / max(1, ‖xⱼ‖∞)`.
    pub fn max_relative_diff(&self, other: &Trajectory) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| {
                let scale = a.iter().fold(1.0f64, |m, x| m.max(x.abs()));
                a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
            })
            .fold(0.0, f64::max)
    }

    pub fn points(&self) -> Vec<ManifoldPoint> {
        self.states
            .iter()
            .map(|x| ManifoldPoint::from_chart(&x[..x.len() / 2]))
            .collect()
    }
}

fn sample_grid(span: (f64, f64), samples: usize) -> Result<Vec<f64>> {
    let (lo, hi) = span;
    if !(lo <= 0.0 && 0.0 <= hi && lo.is_finite() && hi.is_finite()) {
        return Err(EcsError::ParameterDomain(format!(
            "span ({lo}, {hi}) must be finite and contain 0"
        )));
    }
    let mut grid: Vec<f64> = (1..=samples).rev().map(|j| lo * j as f64 / samples as f64).collect();
    grid.push(0.0);
    grid.extend((1..=samples).map(|j| hi * j as f64 / samples as f64));
    grid.dedup();
    Ok(grid)
}

/// `(g(γ̇,γ̇), Σ|terms|)`.
fn energy(model: &Model, x: &[f64], xd: &[f64]) -> (f64, f64) {
    let data = model.data();
    let n = data.n;
    let m = data.m();
    let c = xd[0];
    let ft = data.f.value(x[0]);
    let mut e = 2.0 * c * xd[n - 1];
    let mut scale = e.abs();
    for i in 0..m {
        let eps = data.signature.sign(i);
        let k = eps * (ft + data.a.entries()[i]) * x[i + 1] * x[i + 1] * c * c;
        let w = eps * xd[i + 1] * xd[i + 1];
        e += k + w;
        scale += k.abs() + w.abs();
    }
    (e, scale)
}

fn finish(model: &Model, sigma: Vec<f64>, states: Vec<Vec<f64>>) -> Trajectory {
    let n = model.data().n;
    let (energy, energy_scale) = states.iter().map(|s| energy(model, &s[..n], &s[n..])).unzip();
    Trajectory {
        sigma,
        states,
        energy,
        energy_scale,
    }
}

/// Geodesic through `q0` with chart velocity `qdot0`, using the decoupled
/// structure: `ẋ⁰ = c` is constant, `v` follows the Hill flow in `t`, and
/// `xⁿ` comes from RK4 quadrature of its second-order equation.
pub fn geodesic(
    model: &Model,
    q0: &ManifoldPoint,
    qdot0: &[f64],
    span: (f64, f64),
    opts: &GeodesicOptions,
) -> Result<Trajectory> {
    let data = model.data();
    let n = data.n;
    let m = data.m();
    if qdot0.len() != n || q0.v.len() != m {
        return Err(EcsError::ParameterDomain(format!(
            "point and velocity must have {m} and {n} components"
        )));
    }
    let grid = sample_grid(span, opts.samples)?;
    let x0 = q0.to_chart();
    let c = qdot0[0];
    let t0 = q0.t;
    let flow = model.flow();
    let inv0: Vec<Mat2> = (0..m).map(|i| adj2(&flow.fundamental(i, t0))).collect();
    let vdata: Vec<[f64; 2]> = (0..m)
        .map(|i| if c != 0.0 { [x0[i + 1], qdot0[i + 1] / c] } else { [x0[i + 1], qdot0[i + 1]] })
        .collect();

    // (v, v̇) at affine parameter σ.
    let transverse = |sigma: f64, v: &mut [f64], vd: &mut [f64]| {
        for i in 0..m {
            if c == 0.0 {
                v[i] = vdata[i][0] + vdata[i][1] * sigma;
                vd[i] = vdata[i][1];
            } else {
                let phi = mul2(&flow.fundamental(i, t0 + c * sigma), &inv0[i]);
                v[i] = phi[0] * vdata[i][0] + phi[1] * vdata[i][1];
                vd[i] = c * (phi[2] * vdata[i][0] + phi[3] * vdata[i][1]);
            }
        }
    };
    let mut v = vec![0.0; m];
    let mut vd = vec![0.0; m];
    let mut accel_n = |sigma: f64| -> f64 {
        if c == 0.0 {
            return 0.0;
        }
        transverse(sigma, &mut v, &mut vd);
        let t = t0 + c * sigma;
        let ft = data.f.value(t);
        let vv = data.inner(&v, &v);
        let mut acc = -0.5 * c * c * data.f.derivative(t) * vv;
        for i in 0..m {
            let eps = data.signature.sign(i);
            acc -= 2.0 * c * eps * (ft + data.a.entries()[i]) * v[i] * vd[i];
        }
        acc
    };

    let h_max = data.p / (opts.steps_per_period as f64 * c.abs().max(1.0));
    let mut results: Vec<(f64, f64, f64)> = Vec::with_capacity(grid.len());
    for dir in [-1.0, 1.0] {
        let (mut s, mut xn, mut xnd) = (0.0, x0[n - 1], qdot0[n - 1]);
        let targets: Vec<f64> = grid
            .iter()
            .copied()
            .filter(|&g| if dir < 0.0 { g < 0.0 } else { g > 0.0 })
            .collect();
        let ordered: Vec<f64> = if dir < 0.0 { targets.into_iter().rev().collect() } else { targets };
        for target in ordered {
            let steps = ((target - s).abs() / h_max).ceil().max(1.0) as usize;
            let h = (target - s) / steps as f64;
            for _ in 0..steps {
                let a0 = accel_n(s);
                let am = accel_n(s + 0.5 * h);
                let a1 = accel_n(s + h);
                xn += h * xnd + h * h / 6.0 * (a0 + 2.0 * am);
                xnd += h / 6.0 * (a0 + 4.0 * am + a1);
                s += h;
            }
            s = target;
            results.push((target, xn, xnd));
        }
    }
    results.push((0.0, x0[n - 1], qdot0[n - 1]));
    results.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut states = Vec::with_capacity(grid.len());
    for &(sigma, xn, xnd) in &results {
        let mut v = vec![0.0; m];
        let mut vd = vec![0.0; m];
        transverse(sigma, &mut v, &mut vd);
        let mut state = Vec::with_capacity(2 * n);
        state.push(t0 + c * sigma);
        state.extend_from_slice(&v);
        state.push(xn);
        state.push(c);
        state.extend_from_slice(&vd);
        state.push(xnd);
        states.push(state);
    }
    Ok(finish(model, results.iter().map(|r| r.0).collect(), states))
}

/// The same geodesic from the full equation `ẍᵏ = −Γᵏᵢⱼ ẋⁱ ẋʲ` with adaptive
/// Dormand–Prince steps.
pub fn geodesic_generic(
    model: &Model,
    q0: &ManifoldPoint,
    qdot0: &[f64],
    span: (f64, f64),
    opts: &GeodesicOptions,
    rtol: f64,
) -> Result<Trajectory> {
    let data = model.data();
    let n = data.n;
    let grid = sample_grid(span, opts.samples)?;
    let rhs = |_s: f64, y: &[f64], dy: &mut [f64]| {
        let q = ManifoldPoint::from_chart(&y[..n]);
        dy[..n].copy_from_slice(&y[n..]);
        christoffel_at(data, &q).acceleration(&y[n..], &mut dy[n..]);
    };
    let mut y0 = q0.to_chart();
    y0.extend_from_slice(qdot0);
    let solver = Dopri5::new(rtol, 1e-14);
    let mut out: Vec<(f64, Vec<f64>)> = vec![(0.0, y0.clone())];
    let neg: Vec<f64> = grid.iter().copied().filter(|&g| g < 0.0).rev().collect();
    let pos: Vec<f64> = grid.iter().copied().filter(|&g| g > 0.0).collect();
    for side in [neg, pos] {
        let states = solver.integrate_to_times(&rhs, 0.0, &y0, &side)?;
        out.extend(side.into_iter().zip(states));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (sigma, states) = out.into_iter().unzip();
    Ok(finish(model, sigma, states))
}

/// Columns: `sigma, t, s, v1..vm, g`.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let n = traj.states.first().map_or(0, |s| s.len() / 2);
    let m = n.saturating_sub(2);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["sigma".to_string(), "t".into(), "s".into()];
    header.extend((1..=m).map(|i| format!("v{i}")));
    header.push("g".into());
    w.write_record(&header).map_err(csv_error)?;
    for ((sigma, state), e) in traj.sigma.iter().zip(&traj.states).zip(&traj.energy) {
        let mut row = vec![*sigma, state[0], 2.0 * state[n - 1]];
        row.extend_from_slice(&state[1..n - 1]);
        row.push(*e);
        w.write_record(row.iter().map(|x| x.to_string())).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> EcsError {
    EcsError::Io(e.to_string())
}

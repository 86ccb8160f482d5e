//! Explicit Runge–Kutta integrators for first-order systems `y' = F(t, y)`.
//!
//! Fixed-step RK4 is the production path. Dormand–Prince 5(4) with adaptive
//! steps is used as an independent cross-check.

use crate::error::{EcsError, Result};

/// Classical fourth-order Runge–Kutta with reusable scratch buffers.
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Rk4 {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    pub fn step<F>(&mut self, rhs: &F, t: f64, y: &mut [f64], h: f64)
    where
        F: Fn(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        rhs(t, y, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * self.k1[i];
        }
        rhs(t + 0.5 * h, &self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * self.k2[i];
        }
        rhs(t + 0.5 * h, &self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = y[i] + h * self.k3[i];
        }
        rhs(t + h, &self.tmp, &mut self.k4);
        for i in 0..n {
            y[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }

    /// `steps` equal steps from `t0` to `t1` (either direction).
    pub fn integrate<F>(&mut self, rhs: &F, t0: f64, t1: f64, y: &mut [f64], steps: usize)
    where
        F: Fn(f64, &[f64], &mut [f64]),
    {
        let h = (t1 - t0) / steps as f64;
        for j in 0..steps {
            self.step(rhs, t0 + j as f64 * h, y, h);
        }
    }
}

/// Adaptive Dormand–Prince 5(4).
#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 {
            rtol: 1e-12,
            atol: 1e-14,
            max_steps: 2_000_000,
        }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Dopri5 {
            rtol,
            atol,
            ..Dopri5::default()
        }
    }

    /// Integrates from `t0` to `t1` in place.
    pub fn integrate<F>(&self, rhs: &F, t0: f64, t1: f64, y: &mut [f64]) -> Result<()>
    where
        F: Fn(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        if t1 == t0 {
            return Ok(());
        }
        let dir = (t1 - t0).signum();
        let span = (t1 - t0).abs();
        let mut k = vec![vec![0.0; n]; 7];
        let mut tmp = vec![0.0; n];
        let mut y5 = vec![0.0; n];
        let mut t = t0;
        let mut h = (span * 1e-3).min(1e-2).max(1e-12);
        rhs(t, y, &mut k[0]);
        for _ in 0..self.max_steps {
            let remaining = (t1 - t) * dir;
            if remaining <= 0.0 {
                return Ok(());
            }
            if h > remaining {
                h = remaining;
            }
            let hs = h * dir;
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += hs * A[s][j] * kj[i];
                    }
                    tmp[i] = acc;
                }
                rhs(t + C[s] * hs, &tmp, &mut k[s]);
            }
            let mut err = 0.0f64;
            for i in 0..n {
                let mut s5 = y[i];
                let mut s4 = y[i];
                for s in 0..7 {
                    s5 += hs * B5[s] * k[s][i];
                    s4 += hs * B4[s] * k[s][i];
                }
                y5[i] = s5;
                let sc = self.atol + self.rtol * y[i].abs().max(s5.abs());
                err = err.max(((s5 - s4) / sc).abs());
            }
            if !err.is_finite() {
                return Err(EcsError::IntegratorAccuracy(format!(
                    "non-finite state near t = {t}"
                )));
            }
            if err <= 1.0 {
                t += hs;
                if (t1 - t) * dir < 1e-15 * span.max(1.0) {
                    t = t1;
                }
                y.copy_from_slice(&y5);
                // First-same-as-last: stage 7 is the derivative at the new point.
                k.swap(0, 6);
            }
            let factor = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.2) };
            h *= factor.clamp(0.2, 5.0);
            if h < 1e-14 * span.max(1.0) {
                return Err(EcsError::IntegratorAccuracy(format!(
                    "step size underflow near t = {t}"
                )));
            }
        }
        Err(EcsError::IntegratorAccuracy(format!(
            "step budget {} exhausted before t = {t1}",
            self.max_steps
        )))
    }

    /// States at each of `times` (monotone, starting from `t0`).
    pub fn integrate_to_times<F>(&self, rhs: &F, t0: f64, y0: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>>
    where
        F: Fn(f64, &[f64], &mut [f64]),
    {
        let mut y = y0.to_vec();
        let mut t = t0;
        let mut out = Vec::with_capacity(times.len());
        for &ti in times {
            self.integrate(rhs, t, ti, &mut y)?;
            t = ti;
            out.push(y.clone());
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(_t: f64, y: &[f64], dy: &mut [f64]) {
        dy[0] = y[1];
        dy[1] = -y[0];
    }

    #[test]
    fn rk4_order_four() {
        let mut rk = Rk4::new(2);
        let errs: Vec<f64> = [50, 100]
            .iter()
            .map(|&n| {
                let mut y = [1.0, 0.0];
                rk.integrate(&oscillator, 0.0, 2.0, &mut y, n);
                (y[0] - 2f64.cos()).abs()
            })
            .collect();
        let ratio = errs[0] / errs[1];
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn dopri_matches_closed_form_both_directions() {
        let d = Dopri5::default();
        let mut y = [1.0, 0.0];
        d.integrate(&oscillator, 0.0, 10.0, &mut y).unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-10);
        assert!((y[1] + 10f64.sin()).abs() < 1e-10);
        d.integrate(&oscillator, 10.0, -3.0, &mut y).unwrap();
        assert!((y[0] - 3f64.cos()).abs() < 1e-10);
    }

    #[test]
    fn dopri_reports_blow_up() {
        let d = Dopri5::default();
        let mut y = [1.0];
        let r = d.integrate(&|_t, y: &[f64], dy: &mut [f64]| dy[0] = y[0] * y[0], 0.0, 2.0, &mut y);
        assert!(r.is_err());
    }
}

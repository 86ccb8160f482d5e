//! Solutions of `ü = (f + A)u` (the space 𝓔) and of `u̇ = Bu` (the subspace
//! 𝓛), the form Ω, the translation `(Tu)(t) = u(t − p)` and the lattice.
//!
//! Elements of 𝓔 are keyed by their data at `t = 0`. Each channel is a Hill
//! equation whose fundamental matrix is tabulated once over one period;
//! evaluation at `t = kp + τ` is `Φ(τ) Mᵏ` with `M = Φ(p)`.

mod lattice;

pub use lattice::{
    check_matrix_nontrivial, check_t_nontrivial, lattice_for, lattice_from_multipliers, LatticeBasis, MAX_CONDITION,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{EcsError, Result};
use crate::model::ModelData;
use crate::report::{Check, Report};

pub const DEFAULT_FLOW_STEPS: usize = 4096;

/// 2×2 real matrix, row-major.
pub type Mat2 = [f64; 4];

pub(crate) fn mul2(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

fn det2(a: &Mat2) -> f64 {
    a[0] * a[3] - a[1] * a[2]
}

/// Adjugate; the inverse when `det = 1`.
pub(crate) fn adj2(a: &Mat2) -> Mat2 {
    [a[3], -a[1], -a[2], a[0]]
}

fn pow2(m: &Mat2, k: i64) -> Mat2 {
    let base = if k < 0 { adj2(m) } else { *m };
    let mut e = k.unsigned_abs();
    let mut result = [1.0, 0.0, 0.0, 1.0];
    let mut b = base;
    while e > 0 {
        if e & 1 == 1 {
            result = mul2(&result, &b);
        }
        e >>= 1;
        if e > 0 {
            b = mul2(&b, &b);
        }
    }
    result
}

/// Tabulated fundamental matrices of `üᵢ = (f + aᵢ)uᵢ` on one period.
#[derive(Debug, Clone)]
pub struct HillFlow {
    period: f64,
    steps: usize,
    /// Per channel, `Φᵢ(jh)` for `j = 0..=steps`.
    table: Vec<Vec<Mat2>>,
    q_shift: Vec<f64>,
    f: crate::profile::PeriodicProfile,
}

impl HillFlow {
    pub fn new(data: &ModelData, steps: usize) -> Self {
        let p = data.p;
        let h = p / steps as f64;
        let table = data
            .a
            .entries()
            .iter()
            .map(|&a| {
                let mut phi: Mat2 = [1.0, 0.0, 0.0, 1.0];
                let mut out = Vec::with_capacity(steps + 1);
                out.push(phi);
                for j in 0..steps {
                    let t = j as f64 * h;
                    phi = rk4_hill(&data.f, a, t, &phi, h);
                    out.push(phi);
                }
                out
            })
            .collect();
        HillFlow {
            period: p,
            steps,
            table,
            q_shift: data.a.entries().to_vec(),
            f: data.f.clone(),
        }
    }

    pub fn channels(&self) -> usize {
        self.table.len()
    }

    /// Single-period transfer matrix of channel `i`.
    pub fn monodromy(&self, i: usize) -> Mat2 {
        self.table[i][self.steps]
    }

    /// `Φᵢ(t)`, mapping data at 0 to data at `t`.
    pub fn fundamental(&self, i: usize, t: f64) -> Mat2 {
        let p = self.period;
        let k = (t / p).floor();
        let mut tau = t - k * p;
        if tau >= p {
            tau = 0.0;
        }
        let h = p / self.steps as f64;
        let j = ((tau / h).floor() as usize).min(self.steps - 1);
        let dt = tau - j as f64 * h;
        let mut phi = self.table[i][j];
        if dt > 0.0 {
            phi = rk4_hill(&self.f, self.q_shift[i], j as f64 * h, &phi, dt);
        }
        mul2(&phi, &pow2(&self.monodromy(i), k as i64))
    }

    /// Propagates channel data `(u, u̇)` from `t0` to `t1`.
    pub fn propagate(&self, i: usize, t0: f64, t1: f64, x: [f64; 2]) -> [f64; 2] {
        let to = self.fundamental(i, t1);
        let from = adj2(&self.fundamental(i, t0));
        let m = mul2(&to, &from);
        [m[0] * x[0] + m[1] * x[1], m[2] * x[0] + m[3] * x[1]]
    }
}

fn rk4_hill(f: &crate::profile::PeriodicProfile, a: f64, t: f64, phi: &Mat2, h: f64) -> Mat2 {
    // Φ' = [[0, 1], [q, 0]] Φ
    let rhs = |t: f64, m: &Mat2| -> Mat2 {
        let q = f.value(t) + a;
        [m[2], m[3], q * m[0], q * m[1]]
    };
    let add = |m: &Mat2, k: &Mat2, s: f64| -> Mat2 {
        [m[0] + s * k[0], m[1] + s * k[1], m[2] + s * k[2], m[3] + s * k[3]]
    };
    let k1 = rhs(t, phi);
    let k2 = rhs(t + 0.5 * h, &add(phi, &k1, 0.5 * h));
    let k3 = rhs(t + 0.5 * h, &add(phi, &k2, 0.5 * h));
    let k4 = rhs(t + h, &add(phi, &k3, h));
    let mut out = *phi;
    for r in 0..4 {
        out[r] += h / 6.0 * (k1[r] + 2.0 * k2[r] + 2.0 * k3[r] + k4[r]);
    }
    out
}

/// An element of 𝓔, by position and velocity at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionE {
    pub pos: Vec<f64>,
    pub vel: Vec<f64>,
}

impl SolutionE {
    pub fn new(pos: Vec<f64>, vel: Vec<f64>) -> Self {
        assert_eq!(pos.len(), vel.len());
        SolutionE { pos, vel }
    }

    pub fn zero(m: usize) -> Self {
        SolutionE::new(vec![0.0; m], vec![0.0; m])
    }

    pub fn dim(&self) -> usize {
        self.pos.len()
    }

    pub fn add(&self, other: &SolutionE) -> SolutionE {
        SolutionE {
            pos: self.pos.iter().zip(&other.pos).map(|(a, b)| a + b).collect(),
            vel: self.vel.iter().zip(&other.vel).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> SolutionE {
        SolutionE {
            pos: self.pos.iter().map(|a| a * s).collect(),
            vel: self.vel.iter().map(|a| a * s).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &SolutionE) -> f64 {
        self.pos
            .iter()
            .zip(&other.pos)
            .chain(self.vel.iter().zip(&other.vel))
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// An element of 𝓛, by channel coordinates `y = u(0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionL {
    pub pos: Vec<f64>,
}

/// Per-channel single-period transfer matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Monodromy {
    pub blocks: Vec<Mat2>,
}

impl Monodromy {
    pub fn max_det_drift(&self) -> f64 {
        self.blocks.iter().fold(0.0, |m, b| m.max((det2(b) - 1.0).abs()))
    }

    /// Block-diagonal `2m × 2m` matrix acting on `(u₁, u̇₁, …, u_m, u̇_m)`.
    pub fn assembled(&self) -> DMatrix<f64> {
        let m = self.blocks.len();
        let mut out = DMatrix::zeros(2 * m, 2 * m);
        for (i, b) in self.blocks.iter().enumerate() {
            out[(2 * i, 2 * i)] = b[0];
            out[(2 * i, 2 * i + 1)] = b[1];
            out[(2 * i + 1, 2 * i)] = b[2];
            out[(2 * i + 1, 2 * i + 1)] = b[3];
        }
        out
    }
}

/// Model data together with its tabulated Hill flow.
#[derive(Debug, Clone)]
pub struct Model {
    data: ModelData,
    flow: HillFlow,
}

impl Model {
    pub fn new(data: ModelData) -> Self {
        Model::with_steps(data, DEFAULT_FLOW_STEPS)
    }

    pub fn with_steps(data: ModelData, steps: usize) -> Self {
        let flow = HillFlow::new(&data, steps);
        Model { data, flow }
    }

    pub fn data(&self) -> &ModelData {
        &self.data
    }

    pub fn flow(&self) -> &HillFlow {
        &self.flow
    }

    pub fn m(&self) -> usize {
        self.data.m()
    }

    /// `(u(t), u̇(t))`.
    pub fn evaluate(&self, u: &SolutionE, t: f64) -> (Vec<f64>, Vec<f64>) {
        let m = self.m();
        let mut pos = vec![0.0; m];
        let mut vel = vec![0.0; m];
        for i in 0..m {
            let phi = self.flow.fundamental(i, t);
            pos[i] = phi[0] * u.pos[i] + phi[1] * u.vel[i];
            vel[i] = phi[2] * u.pos[i] + phi[3] * u.vel[i];
        }
        (pos, vel)
    }

    /// `Ω(u,w) = ⟨u̇,w⟩ − ⟨u,ẇ⟩`, evaluated at `t = 0`.
    pub fn omega(&self, u: &SolutionE, w: &SolutionE) -> f64 {
        self.data.inner(&u.vel, &w.pos) - self.data.inner(&u.pos, &w.vel)
    }

    pub fn omega_at(&self, u: &SolutionE, w: &SolutionE, t: f64) -> f64 {
        let (up, uv) = self.evaluate(u, t);
        let (wp, wv) = self.evaluate(w, t);
        self.data.inner(&uv, &wp) - self.data.inner(&up, &wv)
    }

    /// Ω at each time; errors if the values spread by more than `tol`.
    pub fn omega_checked(&self, u: &SolutionE, w: &SolutionE, times: &[f64], tol: f64) -> Result<f64> {
        let values: Vec<f64> = times.iter().map(|&t| self.omega_at(u, w, t)).collect();
        let spread = values.iter().cloned().fold(f64::MIN, f64::max)
            - values.iter().cloned().fold(f64::MAX, f64::min);
        if spread > tol {
            return Err(EcsError::Conservation { spread });
        }
        Ok(self.omega(u, w))
    }

    /// `Tᵏu`, i.e. `t ↦ u(t − kp)`.
    pub fn translate_pow(&self, u: &SolutionE, k: i64) -> SolutionE {
        let m = self.m();
        let mut out = SolutionE::zero(m);
        for i in 0..m {
            let mk = pow2(&self.flow.monodromy(i), -k);
            out.pos[i] = mk[0] * u.pos[i] + mk[1] * u.vel[i];
            out.vel[i] = mk[2] * u.pos[i] + mk[3] * u.vel[i];
        }
        out
    }

    pub fn translate(&self, u: &SolutionE) -> SolutionE {
        self.translate_pow(u, 1)
    }

    pub fn monodromy(&self) -> Result<Monodromy> {
        let mono = Monodromy {
            blocks: (0..self.m()).map(|i| self.flow.monodromy(i)).collect(),
        };
        let drift = mono.max_det_drift();
        if drift > 1e-8 {
            return Err(EcsError::IntegratorAccuracy(format!(
                "monodromy determinant drifts by {drift:e}"
            )));
        }
        Ok(mono)
    }

    /// `(u(t), u̇(t))` for `u ∈ 𝓛`: `uᵢ(t) = exp(∫₀ᵗ bᵢ) yᵢ`, `u̇ = B u`.
    pub fn evaluate_l(&self, u: &SolutionL, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let b = self.data.curve()?;
        let mut pos = Vec::with_capacity(self.m());
        let mut vel = Vec::with_capacity(self.m());
        for (i, y) in u.pos.iter().enumerate() {
            let (bi, int) = b.state(i, t);
            let x = int.exp() * y;
            pos.push(x);
            vel.push(bi * x);
        }
        Ok((pos, vel))
    }

    /// The 𝓔 initial data of `u ∈ 𝓛`.
    pub fn embed_l(&self, u: &SolutionL) -> Result<SolutionE> {
        let b0 = self.data.curve()?.values(0.0);
        Ok(SolutionE::new(
            u.pos.clone(),
            u.pos.iter().zip(&b0).map(|(y, b)| y * b).collect(),
        ))
    }

    /// The element of 𝓛 with `u(t) = x`.
    pub fn l_with_value_at(&self, x: &[f64], t: f64) -> Result<SolutionL> {
        let b = self.data.curve()?;
        Ok(SolutionL {
            pos: x
                .iter()
                .enumerate()
                .map(|(i, xi)| xi * (-b.integral(i, t)).exp())
                .collect(),
        })
    }

    /// Multipliers of `T` on 𝓛 in channel order: `Tu = λu` with
    /// `λᵢ = exp(−∫₀ᵖ bᵢ)`.
    pub fn l_multipliers(&self) -> Result<Vec<f64>> {
        Ok(crate::spectral::multipliers(self.data.curve()?))
    }

    /// Checks Ω constancy, the 𝓛 ⊂ 𝓔 embedding and `T|𝓛 = diag(λ)` on
    /// the given trial solutions.
    pub fn consistency_report(&self, pairs: &[(SolutionE, SolutionE)], ls: &[SolutionL]) -> Result<Report> {
        let p = self.data.p;
        let mut report = Report::new();
        let times: Vec<f64> = (0..10).map(|j| 3.0 * p * j as f64 / 9.0).collect();
        let mut spread = 0.0f64;
        for (u, w) in pairs {
            let vals: Vec<f64> = times.iter().map(|&t| self.omega_at(u, w, t)).collect();
            let scale = 1.0 + vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let s = vals.iter().cloned().fold(f64::MIN, f64::max) - vals.iter().cloned().fold(f64::MAX, f64::min);
            spread = spread.max(s / scale);
        }
        report.push(Check::below("omega constancy (relative spread)", spread, 1e-9));

        let mut embed = 0.0f64;
        let mut l_omega = 0.0f64;
        let mut t_diag = 0.0f64;
        let lambda = self.l_multipliers()?;
        for u in ls {
            let e = self.embed_l(u)?;
            for j in 0..=20 {
                let t = 2.0 * p * j as f64 / 20.0;
                let (xp, xv) = self.evaluate(&e, t);
                let (yp, yv) = self.evaluate_l(u, t)?;
                let scale = 1.0 + yp.iter().chain(&yv).fold(0.0f64, |m, v| m.max(v.abs()));
                for (a, b) in xp.iter().chain(&xv).zip(yp.iter().chain(&yv)) {
                    embed = embed.max((a - b).abs() / scale);
                }
            }
            let tu = self.translate(&e);
            let expected = SolutionE::new(
                e.pos.iter().zip(&lambda).map(|(x, l)| x * l).collect(),
                e.vel.iter().zip(&lambda).map(|(x, l)| x * l).collect(),
            );
            let scale = 1.0 + e.pos.iter().chain(&e.vel).fold(0.0f64, |m, v| m.max(v.abs()));
            t_diag = t_diag.max(tu.max_abs_diff(&expected) / scale);
            for v in ls {
                l_omega = l_omega.max(self.omega(&e, &self.embed_l(v)?).abs());
            }
        }
        report.push(Check::below("L embeds in E (relative)", embed, 1e-9));
        report.push(Check::below("T on L is diag(lambda) (relative)", t_diag, 1e-9));
        report.push(Check::below("omega vanishes on L", l_omega, 1e-10));
        let mono = self.monodromy()?;
        report.push(Check::below("monodromy det drift", mono.max_det_drift(), 1e-10));
        Ok(report)
    }
}

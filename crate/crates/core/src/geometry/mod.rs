//! The model metric `κ dt² + dt ds + ⟨dv,dv⟩` on `ℝ² × V`.
//!
//! Chart coordinates are `x = (t, v₁, …, v_m, s/2)`, so `g₀₀ = κ`,
//! `g₀ₙ = 1` and the `v` block is `diag(ε)`. Curvature is computed by a
//! generic pipeline that only needs the metric and its Christoffel symbols;
//! the model supplies closed-form Christoffels, negative controls supply only
//! a metric and fall back to finite differences.

mod curvature;
mod geodesic;
mod homogeneity;

pub use curvature::{
    christoffel_fd, curvature_at, curvature_report, grad_ricci_norm, grad_weyl_norm, metric_compatibility,
    olszak_test, CurvatureAt, CurvatureReport, PointCurvature, Tensor4,
};
pub use geodesic::{geodesic, geodesic_generic, write_trajectory_csv, GeodesicOptions, Trajectory};
pub use homogeneity::{homogeneity_obstruction, homogeneity_obstruction_on, invariant, Obstruction};

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::ModelData;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldPoint {
    pub t: f64,
    pub s: f64,
    pub v: Vec<f64>,
}

impl ManifoldPoint {
    pub fn new(t: f64, s: f64, v: Vec<f64>) -> Self {
        ManifoldPoint { t, s, v }
    }

    pub fn to_chart(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.v.len() + 2);
        x.push(self.t);
        x.extend_from_slice(&self.v);
        x.push(0.5 * self.s);
        x
    }

    pub fn from_chart(x: &[f64]) -> Self {
        let n = x.len();
        ManifoldPoint {
            t: x[0],
            s: 2.0 * x[n - 1],
            v: x[1..n - 1].to_vec(),
        }
    }

    pub fn max_abs_diff(&self, other: &ManifoldPoint) -> f64 {
        self.to_chart()
            .iter()
            .zip(other.to_chart())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Christoffel symbols `Γᵏᵢⱼ`, stored at `[k][i][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    n: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(n: usize) -> Self {
        Christoffel {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    pub fn set(&mut self, k: usize, i: usize, j: usize, value: f64) {
        let n = self.n;
        self.data[(k * n + i) * n + j] = value;
    }

    /// Sets `Γᵏᵢⱼ = Γᵏⱼᵢ = value`.
    fn set_sym(&mut self, k: usize, i: usize, j: usize, value: f64) {
        self.set(k, i, j, value);
        self.set(k, j, i, value);
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs_diff(&self, other: &Christoffel) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `−Γᵏᵢⱼ ẋⁱ ẋʲ`.
    pub fn acceleration(&self, xdot: &[f64], out: &mut [f64]) {
        let n = self.n;
        for (k, o) in out.iter_mut().enumerate().take(n) {
            let mut acc = 0.0;
            for i in 0..n {
                if xdot[i] == 0.0 {
                    continue;
                }
                let row = &self.data[(k * n + i) * n..(k * n + i + 1) * n];
                acc += xdot[i] * row.iter().zip(xdot).map(|(g, x)| g * x).sum::<f64>();
            }
            *o = -acc;
        }
    }
}

/// Anything that can report a metric in the chart.
pub trait MetricField {
    fn dim(&self) -> usize;

    fn metric(&self, x: &[f64]) -> DMatrix<f64>;

    fn christoffel(&self, x: &[f64]) -> Christoffel {
        christoffel_fd(self, x)
    }
}

/// Metric components at a point, with the closed-form inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricAtPoint {
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub kappa: f64,
}

pub fn metric_at(model: &ModelData, q: &ManifoldPoint) -> MetricAtPoint {
    let n = model.n;
    let kappa = model.kappa(q.t, &q.v);
    let mut g = DMatrix::zeros(n, n);
    let mut g_inv = DMatrix::zeros(n, n);
    g[(0, 0)] = kappa;
    g[(0, n - 1)] = 1.0;
    g[(n - 1, 0)] = 1.0;
    g_inv[(0, n - 1)] = 1.0;
    g_inv[(n - 1, 0)] = 1.0;
    g_inv[(n - 1, n - 1)] = -kappa;
    for i in 0..model.m() {
        let e = model.signature.sign(i);
        g[(i + 1, i + 1)] = e;
        g_inv[(i + 1, i + 1)] = e;
    }
    MetricAtPoint { g, g_inv, kappa }
}

/// Closed-form Christoffel symbols: `Γⁿ₀₀ = ½∂ₜκ`, `Γⁱ₀₀ = −½εᵢ∂ᵢκ`,
/// `Γⁿ₀ᵢ = ½∂ᵢκ`, all others zero.
pub fn christoffel_at(model: &ModelData, q: &ManifoldPoint) -> Christoffel {
    let n = model.n;
    let mut gamma = Christoffel::zeros(n);
    let ft = model.f.value(q.t);
    let vv = model.inner(&q.v, &q.v);
    gamma.set(n - 1, 0, 0, 0.5 * model.f.derivative(q.t) * vv);
    for i in 0..model.m() {
        let e = model.signature.sign(i);
        let q_i = (ft + model.a.entries()[i]) * q.v[i];
        gamma.set(i + 1, 0, 0, -q_i);
        gamma.set_sym(n - 1, 0, i + 1, e * q_i);
    }
    gamma
}

impl MetricField for ModelData {
    fn dim(&self) -> usize {
        self.n
    }

    fn metric(&self, x: &[f64]) -> DMatrix<f64> {
        metric_at(self, &ManifoldPoint::from_chart(x)).g
    }

    fn christoffel(&self, x: &[f64]) -> Christoffel {
        christoffel_at(self, &ManifoldPoint::from_chart(x))
    }
}

/// Test points with `‖v‖ ∈ [0.5, 2]` and `t` stratified over one period.
pub fn sample_points<R: Rng>(model: &ModelData, count: usize, rng: &mut R) -> Vec<ManifoldPoint> {
    let m = model.m();
    (0..count)
        .map(|j| {
            let t = model.p * (j as f64 + rng.gen::<f64>()) / count as f64;
            let mut v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-3);
            let target = rng.gen_range(0.5..2.0);
            v.iter_mut().for_each(|x| *x *= target / norm);
            ManifoldPoint::new(t, rng.gen_range(-1.0..1.0), v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Signature;
    use crate::profile::PeriodicProfile;
    use crate::spectral::TracelessDiag;

    fn model() -> ModelData {
        ModelData::new(
            Signature::euclidean(3),
            PeriodicProfile::cosine(1.0, 0.7226, 0.05).unwrap(),
            TracelessDiag::new(vec![-0.2422, -0.2422, 0.4844]).unwrap(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn metric_example_and_inverse() {
        let d = model();
        let m = metric_at(&d, &ManifoldPoint::new(0.0, 0.0, vec![1.0, 0.0, 0.0]));
        assert!((m.kappa - 0.5304).abs() < 1e-12);
        assert_eq!(m.g[(0, 4)], 1.0);
        assert_eq!(m.g_inv[(4, 4)], -m.kappa);
        let prod = &m.g * &m.g_inv;
        assert_eq!(prod, DMatrix::identity(5, 5));
    }

    #[test]
    fn flat_at_v_zero() {
        let d = model();
        let q = ManifoldPoint::new(0.3, 1.0, vec![0.0; 3]);
        assert_eq!(metric_at(&d, &q).kappa, 0.0);
        assert!(christoffel_at(&d, &q).as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn christoffel_symmetric() {
        let d = model();
        let g = christoffel_at(&d, &ManifoldPoint::new(0.2, 0.0, vec![0.3, -1.0, 0.7]));
        for k in 0..5 {
            for i in 0..5 {
                for j in 0..5 {
                    assert_eq!(g.get(k, i, j), g.get(k, j, i));
                }
            }
        }
    }

    #[test]
    fn chart_round_trip() {
        let q = ManifoldPoint::new(0.1, 2.0, vec![1.0, 2.0]);
        let x = q.to_chart();
        assert_eq!(x, vec![0.1, 1.0, 2.0, 1.0]);
        assert_eq!(ManifoldPoint::from_chart(&x), q);
    }
}

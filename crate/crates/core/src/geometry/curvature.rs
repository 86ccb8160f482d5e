use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Christoffel, ManifoldPoint, MetricField};
use crate::error::{EcsError, Result};
use crate::model::ModelData;
use crate::report::{Check, Report};

const INNER_STEP: f64 = 1e-4;
const OUTER_STEP: f64 = 1e-3;

/// A rank-four array `T[a][b][c][d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(n: usize) -> Self {
        Tensor4 {
            n,
            data: vec![0.0; n * n * n * n],
        }
    }

    fn idx(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        ((a * self.n + b) * self.n + c) * self.n + d
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.data[self.idx(a, b, c, d)]
    }

    fn set(&mut self, a: usize, b: usize, c: usize, d: usize, v: f64) {
        let i = self.idx(a, b, c, d);
        self.data[i] = v;
    }

    /// Coordinate Frobenius norm (the metric contraction degenerates on null
    /// tensors, so components are summed directly).
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Richardson-extrapolated central difference of a vector-valued map along
/// coordinate `e`.
fn derivative<F>(x: &[f64], e: usize, step: f64, mut f: F) -> Vec<f64>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let h = step * (1.0 + x[e].abs());
    let mut central = |h: f64| {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[e] += h;
        xm[e] -= h;
        let (fp, fm) = (f(&xp), f(&xm));
        fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<f64>>()
    };
    let coarse = central(h);
    let fine = central(0.5 * h);
    fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect()
}

fn flatten(m: &DMatrix<f64>) -> Vec<f64> {
    m.iter().copied().collect()
}

/// Christoffel symbols from the coordinate formula `½gᵏˡ(∂ᵢgₗⱼ + ∂ⱼgₗᵢ − ∂ₗgᵢⱼ)`
/// with differenced metric.
pub fn christoffel_fd<F: MetricField + ?Sized>(field: &F, x: &[f64]) -> Christoffel {
    let n = field.dim();
    // dg[e] is ∂ₑg, column-major like nalgebra.
    let dg: Vec<Vec<f64>> = (0..n)
        .map(|e| derivative(x, e, INNER_STEP, |y| flatten(&field.metric(y))))
        .collect();
    let d = |e: usize, i: usize, j: usize| dg[e][j * n + i];
    let g_inv = field
        .metric(x)
        .try_inverse()
        .expect("metric is nondegenerate");
    let mut gamma = Christoffel::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let v: f64 = (0..n)
                    .map(|l| g_inv[(k, l)] * (d(i, l, j) + d(j, l, i) - d(l, i, j)))
                    .sum::<f64>()
                    * 0.5;
                gamma.set(k, i, j, v);
                gamma.set(k, j, i, v);
            }
        }
    }
    gamma
}

/// Curvature data at one point. `riemann` is `R_{abcd}` with
/// `Rᵃ_{bcd} = ∂_cΓᵃ_{db} − ∂_dΓᵃ_{cb} + Γᵃ_{ce}Γᵉ_{db} − Γᵃ_{de}Γᵉ_{cb}` and
/// `Ric_{bd} = Rᵃ_{bad}`.
#[derive(Debug, Clone)]
pub struct CurvatureAt {
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub christoffel: Christoffel,
    pub riemann: Tensor4,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
    pub weyl: Tensor4,
}

pub fn curvature_at<F: MetricField + ?Sized>(field: &F, x: &[f64]) -> CurvatureAt {
    let n = field.dim();
    let gamma = field.christoffel(x);
    let dgamma: Vec<Vec<f64>> = (0..n)
        .map(|e| derivative(x, e, INNER_STEP, |y| field.christoffel(y).as_slice().to_vec()))
        .collect();
    let dg = |e: usize, a: usize, b: usize, c: usize| dgamma[e][(a * n + b) * n + c];
    let g = field.metric(x);
    let g_inv = g.clone().try_inverse().expect("metric is nondegenerate");

    let mut r_up = Tensor4::zeros(n);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut v = dg(c, a, d, b) - dg(d, a, c, b);
                    for e in 0..n {
                        v += gamma.get(a, c, e) * gamma.get(e, d, b) - gamma.get(a, d, e) * gamma.get(e, c, b);
                    }
                    r_up.set(a, b, c, d, v);
                }
            }
        }
    }
    let mut riemann = Tensor4::zeros(n);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let v: f64 = (0..n).map(|e| g[(a, e)] * r_up.get(e, b, c, d)).sum();
                    riemann.set(a, b, c, d, v);
                }
            }
        }
    }
    let ricci = DMatrix::from_fn(n, n, |b, d| (0..n).map(|a| r_up.get(a, b, a, d)).sum());
    let scalar: f64 = (0..n)
        .flat_map(|b| (0..n).map(move |d| (b, d)))
        .map(|(b, d)| g_inv[(b, d)] * ricci[(b, d)])
        .sum();
    let weyl = weyl_from(&g, &riemann, &ricci, scalar);
    CurvatureAt {
        g,
        g_inv,
        christoffel: gamma,
        riemann,
        ricci,
        scalar,
        weyl,
    }
}

fn weyl_from(g: &DMatrix<f64>, riemann: &Tensor4, ricci: &DMatrix<f64>, scalar: f64) -> Tensor4 {
    let n = g.nrows();
    let nf = n as f64;
    let mut w = Tensor4::zeros(n);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let ric = g[(a, c)] * ricci[(b, d)] - g[(a, d)] * ricci[(b, c)] + g[(b, d)] * ricci[(a, c)]
                        - g[(b, c)] * ricci[(a, d)];
                    let gg = g[(a, c)] * g[(b, d)] - g[(a, d)] * g[(b, c)];
                    let v = riemann.get(a, b, c, d) - ric / (nf - 2.0) + scalar * gg / ((nf - 1.0) * (nf - 2.0));
                    w.set(a, b, c, d, v);
                }
            }
        }
    }
    w
}

/// `‖∇W‖` with `∇ₑW_{abcd} = ∂ₑW_{abcd} − Γᶠₑₐ W_{fbcd} − … `, the partial
/// derivative differenced from neighbouring curvature evaluations.
pub fn grad_weyl_norm<F: MetricField + ?Sized>(field: &F, x: &[f64], at: &CurvatureAt) -> f64 {
    let n = field.dim();
    let w = &at.weyl;
    let gamma = &at.christoffel;
    let mut total = 0.0;
    for e in 0..n {
        let dw = derivative(x, e, OUTER_STEP, |y| curvature_at(field, y).weyl.data);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut v = dw[w.idx(a, b, c, d)];
                        for f in 0..n {
                            v -= gamma.get(f, e, a) * w.get(f, b, c, d)
                                + gamma.get(f, e, b) * w.get(a, f, c, d)
                                + gamma.get(f, e, c) * w.get(a, b, f, d)
                                + gamma.get(f, e, d) * w.get(a, b, c, f);
                        }
                        total += v * v;
                    }
                }
            }
        }
    }
    total.sqrt()
}

/// `‖∇Ric‖`, same scheme as [`grad_weyl_norm`].
pub fn grad_ricci_norm<F: MetricField + ?Sized>(field: &F, x: &[f64], at: &CurvatureAt) -> f64 {
    let n = field.dim();
    let gamma = &at.christoffel;
    let ric = &at.ricci;
    let mut total = 0.0;
    for e in 0..n {
        let dr = derivative(x, e, OUTER_STEP, |y| flatten(&curvature_at(field, y).ricci));
        for a in 0..n {
            for b in 0..n {
                let mut v = dr[b * n + a];
                for f in 0..n {
                    v -= gamma.get(f, e, a) * ric[(f, b)] + gamma.get(f, e, b) * ric[(a, f)];
                }
                total += v * v;
            }
        }
    }
    total.sqrt()
}

/// `max |∇ₖgᵢⱼ|` over the points, with differenced `∂g`.
pub fn metric_compatibility<F: MetricField + ?Sized>(field: &F, points: &[Vec<f64>]) -> f64 {
    let n = field.dim();
    let mut worst = 0.0f64;
    for x in points {
        let g = field.metric(x);
        let gamma = field.christoffel(x);
        for k in 0..n {
            let dg = derivative(x, k, INNER_STEP, |y| flatten(&field.metric(y)));
            for i in 0..n {
                for j in 0..n {
                    let mut v = dg[j * n + i];
                    for l in 0..n {
                        v -= gamma.get(l, k, i) * g[(l, j)] + gamma.get(l, k, j) * g[(i, l)];
                    }
                    worst = worst.max(v.abs());
                }
            }
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCurvature {
    pub point: ManifoldPoint,
    pub ricci_11_over_f: f64,
    pub ricci_other_max: f64,
    pub scalar: f64,
    pub weyl_norm: f64,
    pub weyl_off_pattern: f64,
    pub weyl_component_error: f64,
    pub grad_weyl_norm: f64,
    pub grad_ricci_norm: f64,
    pub fdot: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub samples: Vec<PointCurvature>,
    pub report: Report,
}

impl CurvatureReport {
    /// The first failed identity as an error.
    pub fn require(&self) -> Result<()> {
        match self.report.failures().next() {
            None => Ok(()),
            Some(c) => Err(EcsError::GeometryVerification {
                identity: c.name.clone(),
                detail: format!("measured {:e} against {:e}", c.measured, c.tolerance),
            }),
        }
    }
}

/// Index pattern of `W_{0i0j}` and its symmetry images.
fn on_weyl_pattern(n: usize, idx: [usize; 4]) -> bool {
    let spatial = |i: usize| i >= 1 && i <= n - 2;
    let [a, b, c, d] = idx;
    let pair = |x: usize, y: usize| (x == 0 && spatial(y)) || (spatial(x) && y == 0);
    pair(a, b) && pair(c, d)
}

/// Ricci, scalar, Weyl and covariant-derivative identities at each point.
pub fn curvature_report(model: &ModelData, points: &[ManifoldPoint]) -> CurvatureReport {
    let n = model.n;
    let expected = 2.0 - n as f64;
    let mut samples = Vec::with_capacity(points.len());
    for q in points {
        let x = q.to_chart();
        let at = curvature_at(model, &x);
        let ft = model.f.value(q.t);
        let mut other = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                if (a, b) != (0, 0) {
                    other = other.max(at.ricci[(a, b)].abs());
                }
            }
        }
        let mut off = 0.0f64;
        let mut comp = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let w = at.weyl.get(a, b, c, d);
                        if !on_weyl_pattern(n, [a, b, c, d]) {
                            off = off.max(w.abs());
                        }
                    }
                }
            }
        }
        for i in 0..model.m() {
            for j in 0..model.m() {
                let exact = if i == j {
                    -model.signature.sign(i) * model.a.entries()[i]
                } else {
                    0.0
                };
                comp = comp.max((at.weyl.get(0, i + 1, 0, j + 1) - exact).abs());
            }
        }
        samples.push(PointCurvature {
            point: q.clone(),
            ricci_11_over_f: at.ricci[(0, 0)] / ft,
            ricci_other_max: other,
            scalar: at.scalar,
            weyl_norm: at.weyl.norm(),
            weyl_off_pattern: off,
            weyl_component_error: comp,
            grad_weyl_norm: grad_weyl_norm(model, &x, &at),
            grad_ricci_norm: grad_ricci_norm(model, &x, &at),
            fdot: model.f.derivative(q.t),
        });
    }
    let mut report = Report::new();
    let max = |f: &dyn Fn(&PointCurvature) -> f64| samples.iter().map(f).fold(0.0f64, f64::max);
    let min = |f: &dyn Fn(&PointCurvature) -> f64| samples.iter().map(f).fold(f64::INFINITY, f64::min);
    report.push(Check::below(
        format!("Ric_11/f = {expected} (relative)"),
        max(&|s| ((s.ricci_11_over_f - expected) / expected).abs()),
        1e-5,
    ));
    report.push(Check::below("other Ricci components", max(&|s| s.ricci_other_max), 1e-7));
    report.push(Check::below("scalar curvature", max(&|s| s.scalar.abs()), 1e-8));
    report.push(Check::above("|W|", min(&|s| s.weyl_norm), 1e-3));
    report.push(Check::below("W outside W_1i1j pattern", max(&|s| s.weyl_off_pattern), 1e-7));
    report.push(Check::below(
        "W_1i1j = -eps_i a_i delta_ij",
        max(&|s| s.weyl_component_error),
        1e-7,
    ));
    report.push(Check::below(
        "|grad W| / |W|",
        max(&|s| s.grad_weyl_norm / s.weyl_norm),
        1e-5,
    ));
    let moving: Vec<&PointCurvature> = samples.iter().filter(|s| s.fdot.abs() > 0.1).collect();
    if moving.is_empty() {
        report.note("no sample with |f'| > 0.1; grad Ric check skipped");
    } else {
        report.push(Check::above(
            "|grad Ric| where |f'| > 0.1",
            moving.iter().map(|s| s.grad_ricci_norm).fold(f64::INFINITY, f64::min),
            1e-3,
        ));
    }
    CurvatureReport { samples, report }
}

/// With `ξ = dt`, checks `ξ ∧ W(eₐ, e_b, ·, ·) = 0` for every coordinate
/// bivector, that `∇t = ∂ₙ`, and that `∂ₙ` is parallel.
pub fn olszak_test<F: MetricField + ?Sized>(field: &F, points: &[Vec<f64>]) -> Report {
    let n = field.dim();
    let mut wedge = 0.0f64;
    let mut gradient = 0.0f64;
    let mut parallel = 0.0f64;
    for x in points {
        let at = curvature_at(field, x);
        for a in 0..n {
            for b in 0..n {
                let w = |c: usize, d: usize| at.weyl.get(a, b, c, d);
                let xi = |c: usize| if c == 0 { 1.0 } else { 0.0 };
                for c in 0..n {
                    for d in c + 1..n {
                        for e in d + 1..n {
                            let v = xi(c) * w(d, e) - xi(d) * w(c, e) + xi(e) * w(c, d);
                            wedge = wedge.max(v.abs());
                        }
                    }
                }
            }
        }
        for k in 0..n {
            let expected = if k == n - 1 { 1.0 } else { 0.0 };
            gradient = gradient.max((at.g_inv[(k, 0)] - expected).abs());
            for a in 0..n {
                parallel = parallel.max(at.christoffel.get(k, a, n - 1).abs());
            }
        }
    }
    let mut report = Report::new();
    report.push(Check::below("dt ^ W(u,u',.,.)", wedge, 1e-8));
    report.push(Check::below("grad t = d_n", gradient, 1e-12));
    report.push(Check::below("d_n parallel", parallel, 1e-10));
    report
}

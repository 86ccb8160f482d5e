//! The group `G = ℤ × ℝ × 𝓔` acting on the model manifold, and the discrete
//! subgroup `Γ = ℤ × ℤθ × Λ` whose quotient is compact.

mod quotient;

pub use quotient::{bundle_nontriviality_evidence, commutator, FundamentalDomain, GammaElement, Quotient};

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EcsError, Result};
use crate::geometry::{metric_at, ManifoldPoint};
use crate::ode::{Model, SolutionE};
use crate::report::{Check, Report};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub k: i64,
    pub q: f64,
    pub u: SolutionE,
}

impl GroupElement {
    pub fn new(k: i64, q: f64, u: SolutionE) -> Self {
        GroupElement { k, q, u }
    }

    pub fn identity(m: usize) -> Self {
        GroupElement::new(0, 0.0, SolutionE::zero(m))
    }

    pub fn translation(k: i64, m: usize) -> Self {
        GroupElement::new(k, 0.0, SolutionE::zero(m))
    }

    /// `(k, q, u₁…u_m, u̇₁…u̇_m)` at `t = 0`.
    pub fn components(&self) -> Vec<f64> {
        let mut out = vec![self.k as f64, self.q];
        out.extend_from_slice(&self.u.pos);
        out.extend_from_slice(&self.u.vel);
        out
    }

    pub fn random<R: Rng>(m: usize, rng: &mut R) -> Self {
        let mut coord = || rng.gen_range(-1.0..1.0);
        let pos = (0..m).map(|_| coord()).collect();
        let vel = (0..m).map(|_| coord()).collect();
        GroupElement::new(rng.gen_range(-3..=3), rng.gen_range(-2.0..2.0), SolutionE::new(pos, vel))
    }
}

/// A point of `ℝ × ℝ × 𝓔`, the space carrying the auxiliary action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxPoint {
    pub t: f64,
    pub z: f64,
    pub w: SolutionE,
}

impl AuxPoint {
    pub fn components(&self) -> Vec<f64> {
        let mut out = vec![self.t, self.z];
        out.extend_from_slice(&self.w.pos);
        out.extend_from_slice(&self.w.vel);
        out
    }
}

fn require_dim(model: &Model, u: &SolutionE) -> Result<()> {
    if u.dim() != model.m() {
        return Err(EcsError::ModelMismatch(format!(
            "element of dimension {} for a model with m = {}",
            u.dim(),
            model.m()
        )));
    }
    Ok(())
}

/// `max |a − b| / max(1, max |a|)`.
pub fn relative_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

/// `(k,q,u)·(ℓ,r,w) = (k+ℓ, q+r−Ω(u,Tˡw), T⁻ˡu + w)`.
pub fn group_op(model: &Model, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
    require_dim(model, &a.u)?;
    require_dim(model, &b.u)?;
    let q = a.q + b.q - model.omega(&a.u, &model.translate_pow(&b.u, b.k));
    let u = model.translate_pow(&a.u, -b.k).add(&b.u);
    Ok(GroupElement::new(a.k + b.k, q, u))
}

/// `(k,q,u)⁻¹ = (−k, −q, −Tᵏu)`; the `Ω` term of the product vanishes since
/// `Ω(u,u) = 0`.
pub fn inverse(model: &Model, g: &GroupElement) -> Result<GroupElement> {
    require_dim(model, &g.u)?;
    Ok(GroupElement::new(-g.k, -g.q, model.translate_pow(&g.u, g.k).scale(-1.0)))
}

/// `(k,q,u)·(t,s,v) = (t+kp, s+q−⟨u̇(t), 2v+u(t)⟩, v+u(t))`.
pub fn act_on_m(model: &Model, g: &GroupElement, x: &ManifoldPoint) -> Result<ManifoldPoint> {
    require_dim(model, &g.u)?;
    let (u, ud) = model.evaluate(&g.u, x.t);
    let data = model.data();
    let two_v_u: Vec<f64> = x.v.iter().zip(&u).map(|(v, u)| 2.0 * v + u).collect();
    Ok(ManifoldPoint::new(
        x.t + g.k as f64 * data.p,
        x.s + g.q - data.inner(&ud, &two_v_u),
        x.v.iter().zip(&u).map(|(v, u)| v + u).collect(),
    ))
}

/// `(k,q,u)·(t,z,w) = (t+kp, z+q−Ω(u,w), Tᵏ(w+u))`.
pub fn act_on_re(model: &Model, g: &GroupElement, x: &AuxPoint) -> Result<AuxPoint> {
    require_dim(model, &g.u)?;
    require_dim(model, &x.w)?;
    Ok(AuxPoint {
        t: x.t + g.k as f64 * model.data().p,
        z: x.z + g.q - model.omega(&g.u, &x.w),
        w: model.translate_pow(&x.w.add(&g.u), g.k),
    })
}

/// `(t,z,w) ↦ (t, z − ⟨ẇ(t),w(t)⟩, w(t))`, intertwining the two actions.
pub fn equivariant_map(model: &Model, x: &AuxPoint) -> ManifoldPoint {
    let (w, wd) = model.evaluate(&x.w, x.t);
    ManifoldPoint::new(x.t, x.z - model.data().inner(&wd, &w), w)
}

fn random_point<R: Rng>(model: &Model, rng: &mut R) -> ManifoldPoint {
    let p = model.data().p;
    ManifoldPoint::new(
        rng.gen_range(-p..2.0 * p),
        rng.gen_range(-2.0..2.0),
        (0..model.m()).map(|_| rng.gen_range(-1.5..1.5)).collect(),
    )
}

fn random_aux<R: Rng>(model: &Model, rng: &mut R) -> AuxPoint {
    let m = model.m();
    let GroupElement { q, u, .. } = GroupElement::random(m, rng);
    AuxPoint {
        t: rng.gen_range(-model.data().p..2.0 * model.data().p),
        z: q,
        w: u,
    }
}

fn chart(x: &ManifoldPoint) -> Vec<f64> {
    x.to_chart()
}

/// Group axioms, both action axioms, the conjugation identity, equivariance
/// and the `Ω`-cocycle bookkeeping on random instances. Deviations are
/// relative to `max(1, |components|)`.
pub fn group_axioms_report<R: Rng>(model: &Model, trials: usize, rng: &mut R) -> Result<Report> {
    let m = model.m();
    let e = GroupElement::identity(m);
    let mut worst = [0.0f64; 9];
    for _ in 0..trials {
        let a = GroupElement::random(m, rng);
        let b = GroupElement::random(m, rng);
        let c = GroupElement::random(m, rng);
        let x = random_point(model, rng);
        let y = random_aux(model, rng);

        let ea = group_op(model, &e, &a)?;
        let ae = group_op(model, &a, &e)?;
        worst[0] = worst[0]
            .max(relative_diff(&a.components(), &ea.components()))
            .max(relative_diff(&a.components(), &ae.components()))
            .max(relative_diff(&chart(&x), &chart(&act_on_m(model, &e, &x)?)));

        let ab = group_op(model, &a, &b)?;
        let ab_c = group_op(model, &ab, &c)?;
        let a_bc = group_op(model, &a, &group_op(model, &b, &c)?)?;
        worst[1] = worst[1].max(relative_diff(&ab_c.components(), &a_bc.components()));

        let inv = inverse(model, &a)?;
        for prod in [group_op(model, &a, &inv)?, group_op(model, &inv, &a)?] {
            worst[2] = worst[2].max(relative_diff(&e.components(), &prod.components()));
        }

        let lhs = act_on_m(model, &a, &act_on_m(model, &b, &x)?)?;
        let rhs = act_on_m(model, &ab, &x)?;
        worst[3] = worst[3].max(relative_diff(&chart(&lhs), &chart(&rhs)));

        let lhs = act_on_re(model, &a, &act_on_re(model, &b, &y)?)?;
        let rhs = act_on_re(model, &ab, &y)?;
        worst[4] = worst[4].max(relative_diff(&lhs.components(), &rhs.components()));

        // (k,q,u)·(0,r,w)·(k,q,u)⁻¹ = (0, r − 2Ω(u,w), Tᵏw)
        let h = GroupElement::new(0, b.q, b.u.clone());
        let conj = group_op(model, &group_op(model, &a, &h)?, &inv)?;
        let expected = GroupElement::new(
            0,
            b.q - 2.0 * model.omega(&a.u, &b.u),
            model.translate_pow(&b.u, a.k),
        );
        worst[5] = worst[5].max(relative_diff(&expected.components(), &conj.components()));

        let lhs = equivariant_map(model, &act_on_re(model, &a, &y)?);
        let rhs = act_on_m(model, &a, &equivariant_map(model, &y))?;
        worst[6] = worst[6].max(relative_diff(&chart(&lhs), &chart(&rhs)));

        // The z-shift of a two-step action equals the product's q minus Ω
        // against the starting point.
        let two_step = act_on_re(model, &a, &act_on_re(model, &b, &y)?)?;
        let shift = ab.q - model.omega(&ab.u, &y.w);
        let scale = 1.0f64.max(y.z.abs()).max(two_step.z.abs());
        worst[7] = worst[7].max((two_step.z - y.z - shift).abs() / scale);

        // Ω is T-invariant, which the product relies on.
        let ta = model.translate_pow(&a.u, b.k);
        let tb = model.translate_pow(&b.u, b.k);
        let omega = model.omega(&a.u, &b.u);
        worst[8] = worst[8].max((model.omega(&ta, &tb) - omega).abs() / omega.abs().max(1.0));
    }
    let names = [
        "identity",
        "associativity",
        "inverse round trip",
        "action axiom on M",
        "action axiom on R x R x E",
        "conjugation identity",
        "equivariance of (t,z,w) -> (t, z - <w',w>, w)",
        "omega cocycle in z",
        "omega is T-invariant",
    ];
    let mut report = Report::new();
    for (name, value) in names.iter().zip(worst) {
        report.push(Check::below(*name, value, 1e-9));
    }
    report.note(format!("{trials} random instances; deviations relative to max(1, |components|)"));
    Ok(report)
}

/// Differential of `act_on_m` in chart coordinates `(t, v, s/2)`, using
/// `ü = (f + A)u`.
pub fn action_differential(model: &Model, g: &GroupElement, x: &ManifoldPoint) -> Result<DMatrix<f64>> {
    require_dim(model, &g.u)?;
    let data = model.data();
    let n = data.n;
    let m = data.m();
    let (u, ud) = model.evaluate(&g.u, x.t);
    let ft = data.f.value(x.t);
    let udd: Vec<f64> = (0..m).map(|i| (ft + data.a.entries()[i]) * u[i]).collect();
    let two_v_u: Vec<f64> = x.v.iter().zip(&u).map(|(v, u)| 2.0 * v + u).collect();
    let mut j = DMatrix::identity(n, n);
    for i in 0..m {
        j[(i + 1, 0)] = ud[i];
        j[(n - 1, i + 1)] = -data.signature.sign(i) * ud[i];
    }
    j[(n - 1, 0)] = -0.5 * (data.inner(&udd, &two_v_u) + data.inner(&ud, &ud));
    Ok(j)
}

/// Central differences of `act_on_m` in chart coordinates, Richardson
/// extrapolated.
pub fn action_differential_fd(model: &Model, g: &GroupElement, x: &ManifoldPoint) -> Result<DMatrix<f64>> {
    let x0 = x.to_chart();
    let n = x0.len();
    let image = |y: &[f64]| -> Result<Vec<f64>> { Ok(act_on_m(model, g, &ManifoldPoint::from_chart(y))?.to_chart()) };
    let mut j = DMatrix::zeros(n, n);
    for e in 0..n {
        let h = 1e-3 * (1.0 + x0[e].abs());
        let central = |h: f64| -> Result<Vec<f64>> {
            let mut xp = x0.clone();
            let mut xm = x0.clone();
            xp[e] += h;
            xm[e] -= h;
            let (fp, fm) = (image(&xp)?, image(&xm)?);
            Ok(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect())
        };
        let coarse = central(h)?;
        let fine = central(0.5 * h)?;
        for r in 0..n {
            j[(r, e)] = (4.0 * fine[r] - coarse[r]) / 3.0;
        }
    }
    Ok(j)
}

/// Pulls the metric back through the differential of `g` at each point and
/// compares with the metric there.
pub fn isometry_check(model: &Model, g: &GroupElement, points: &[ManifoldPoint]) -> Result<Report> {
    if points.len() < 10 {
        return Err(EcsError::ParameterDomain(format!(
            "isometry check needs at least 10 points, got {}",
            points.len()
        )));
    }
    let data = model.data();
    let (mut analytic, mut differenced, mut jac) = (0.0f64, 0.0f64, 0.0f64);
    for x in points {
        let gx = act_on_m(model, g, x)?;
        let g_here = metric_at(data, x).g;
        let g_there = metric_at(data, &gx).g;
        let ja = action_differential(model, g, x)?;
        let jf = action_differential_fd(model, g, x)?;
        analytic = analytic.max((ja.transpose() * &g_there * &ja - &g_here).amax());
        differenced = differenced.max((jf.transpose() * &g_there * &jf - &g_here).amax());
        jac = jac.max((&ja - &jf).amax());
    }
    let mut report = Report::new();
    report.push(Check::below("metric pullback (analytic differential)", analytic, 1e-7));
    report.push(Check::below("metric pullback (differenced action)", differenced, 1e-7));
    report.push(Check::below("analytic vs differenced differential", jac, 1e-6));
    Ok(report)
}

/// [`isometry_check`] for `count` random elements, merged.
pub fn isometry_suite<R: Rng>(model: &Model, count: usize, points: &[ManifoldPoint], rng: &mut R) -> Result<Report> {
    let reports = (0..count)
        .map(|_| isometry_check(model, &GroupElement::random(model.m(), rng), points))
        .collect::<Result<Vec<_>>>()?;
    let mut report = Report::worst_of(reports);
    report.note(format!("{count} random elements at {} points", points.len()));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelData, Signature};
    use crate::profile::PeriodicProfile;
    use crate::spectral::TracelessDiag;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> Model {
        let data = ModelData::new(
            "+-+".parse::<Signature>().unwrap(),
            PeriodicProfile::cosine(1.0, 0.72, 0.05).unwrap(),
            TracelessDiag::new(vec![-0.24, -0.24, 0.48]).unwrap(),
            None,
        )
        .unwrap();
        Model::new(data)
    }

    #[test]
    fn translations_compose_additively() {
        let model = model();
        let g = group_op(&model, &GroupElement::translation(2, 3), &GroupElement::translation(-5, 3)).unwrap();
        assert_eq!(g, GroupElement::translation(-3, 3));
    }

    #[test]
    fn identity_fixes_points() {
        let model = model();
        let x = ManifoldPoint::new(0.3, -1.0, vec![0.5, 0.2, -0.1]);
        assert_eq!(act_on_m(&model, &GroupElement::identity(3), &x).unwrap(), x);
    }

    #[test]
    fn mismatched_dimension_rejected() {
        let model = model();
        let g = GroupElement::identity(2);
        assert!(matches!(
            group_op(&model, &g, &GroupElement::identity(3)),
            Err(EcsError::ModelMismatch(_))
        ));
    }

    #[test]
    fn axioms_hold_on_random_instances() {
        let model = model();
        let r = group_axioms_report(&model, 20, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
    }
}

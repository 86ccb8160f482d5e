use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{group_op, inverse, relative_diff, GroupElement};
use crate::error::{EcsError, Result};
use crate::geometry::ManifoldPoint;
use crate::ode::{check_t_nontrivial, LatticeBasis, Model, SolutionL};
use crate::polynomial::IntMatrix;
use crate::report::{Check, Report};

/// Fractional parts within this of an integer are rounded to it, so canonical
/// representatives are stable under recomputation.
const SNAP: f64 = 1e-12;

/// Bound on the conditioning of the evaluation map `𝓛 → V`.
const MAX_EVALUATION_CONDITION: f64 = 1e9;

/// `Γ = ℤ × ℤθ × Λ`, with the lattice part kept as exact integer coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GammaElement {
    pub k: i64,
    pub l: i64,
    pub z: Vec<i64>,
}

impl GammaElement {
    pub fn new(k: i64, l: i64, z: Vec<i64>) -> Self {
        GammaElement { k, l, z }
    }

    pub fn identity(m: usize) -> Self {
        GammaElement::new(0, 0, vec![0; m])
    }

    pub fn is_identity(&self) -> bool {
        self.k == 0 && self.l == 0 && self.z.iter().all(|&x| x == 0)
    }

    pub fn random<R: Rng>(m: usize, bound: i64, rng: &mut R) -> Self {
        GammaElement::new(
            rng.gen_range(-bound..=bound),
            rng.gen_range(-bound..=bound),
            (0..m).map(|_| rng.gen_range(-bound..=bound)).collect(),
        )
    }
}

fn checked_apply(t: &IntMatrix, z: &[i64]) -> Option<Vec<i64>> {
    let n = t.dim();
    (0..n)
        .map(|i| {
            (0..n).try_fold(0i64, |acc, j| acc.checked_add(t.get(i, j).checked_mul(z[j])?))
        })
        .collect()
}

fn floor_snapped(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < SNAP {
        r
    } else {
        x.floor()
    }
}

fn to_i64(x: f64) -> Result<i64> {
    if x.is_finite() && x.abs() < 2f64.powi(53) {
        Ok(x as i64)
    } else {
        Err(EcsError::Conditioning { condition: x.abs() })
    }
}

/// The half-open set `t ∈ [0,p)`, `s ∈ [0,θ)`, `v` with lattice coordinates
/// of the element of 𝓛 through `v` at time `t` in `[0,1)ᵐ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FundamentalDomain {
    pub period: f64,
    pub theta: f64,
    /// Lattice generators in channel coordinates at `t = 0`.
    pub generators: Vec<Vec<f64>>,
    pub half_open: bool,
    pub snap: f64,
}

/// Model, lattice and `θ`: everything the quotient `M̂/Γ` needs.
#[derive(Debug, Clone)]
pub struct Quotient {
    model: Model,
    lattice: LatticeBasis,
    theta: f64,
    companion_inv: IntMatrix,
}

impl Quotient {
    pub fn new(model: Model, lattice: LatticeBasis, theta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(EcsError::ParameterDomain(format!("theta = {theta} is not positive")));
        }
        model.data().curve()?;
        if lattice.dim() != model.m() {
            return Err(EcsError::ModelMismatch(format!(
                "lattice of rank {} for m = {}",
                lattice.dim(),
                model.m()
            )));
        }
        let companion_inv = lattice.companion().unimodular_inverse().ok_or_else(|| {
            EcsError::Consistency("companion matrix is not unimodular".into())
        })?;
        Ok(Quotient {
            model,
            lattice,
            theta,
            companion_inv,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn lattice(&self) -> &LatticeBasis {
        &self.lattice
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn m(&self) -> usize {
        self.model.m()
    }

    pub fn domain(&self) -> FundamentalDomain {
        let s = self.lattice.change_of_basis();
        FundamentalDomain {
            period: self.model.data().p,
            theta: self.theta,
            generators: (0..self.m()).map(|j| s.column(j).iter().copied().collect()).collect(),
            half_open: true,
            snap: SNAP,
        }
    }

    /// `Cᵏ z` for any integer `k`, or an error on overflow.
    pub fn companion_pow_apply(&self, k: i64, z: &[i64]) -> Result<Vec<i64>> {
        let base = if k >= 0 { self.lattice.companion() } else { &self.companion_inv };
        let mut out = z.to_vec();
        for _ in 0..k.unsigned_abs() {
            out = checked_apply(base, &out).ok_or_else(|| {
                EcsError::ParameterDomain(format!("lattice coordinates overflow at power {k}"))
            })?;
        }
        Ok(out)
    }

    /// `(k,ℓ,z)·(k',ℓ',z') = (k+k', ℓ+ℓ', C^{−k'} z + z')`. The `Ω` term
    /// vanishes on 𝓛 and `T` is `C` in lattice coordinates.
    pub fn compose(&self, a: &GammaElement, b: &GammaElement) -> Result<GammaElement> {
        let shifted = self.companion_pow_apply(-b.k, &a.z)?;
        let overflow = || EcsError::ParameterDomain("Γ element overflows i64".into());
        let z = shifted
            .iter()
            .zip(&b.z)
            .map(|(x, y)| x.checked_add(*y).ok_or_else(overflow))
            .collect::<Result<Vec<i64>>>()?;
        Ok(GammaElement::new(
            a.k.checked_add(b.k).ok_or_else(overflow)?,
            a.l.checked_add(b.l).ok_or_else(overflow)?,
            z,
        ))
    }

    /// `(k,ℓ,z)⁻¹ = (−k, −ℓ, −Cᵏ z)`.
    pub fn gamma_inverse(&self, g: &GammaElement) -> Result<GammaElement> {
        let z = self.companion_pow_apply(g.k, &g.z)?;
        Ok(GammaElement::new(-g.k, -g.l, z.iter().map(|x| -x).collect()))
    }

    /// The lattice element `S z` as an element of 𝓛.
    pub fn lattice_element(&self, z: &[i64]) -> SolutionL {
        self.lattice.element(z)
    }

    /// `γ` as an element of `G`.
    pub fn to_group_element(&self, g: &GammaElement) -> Result<GroupElement> {
        let u = self.model.embed_l(&self.lattice_element(&g.z))?;
        Ok(GroupElement::new(g.k, g.l as f64 * self.theta, u))
    }

    /// `(u(t), u̇(t))` for `u ∈ 𝓛` with channel coordinates `y`.
    fn eval_l(&self, y: &[f64], t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        self.model.evaluate_l(&SolutionL { pos: y.to_vec() }, t)
    }

    /// `(k,ℓθ,u)·(t,s,v)` with `u ∈ Λ`, so `u̇(t) = B(t)u(t)`.
    pub fn gamma_act(&self, g: &GammaElement, x: &ManifoldPoint) -> Result<ManifoldPoint> {
        let y = self.lattice.channel_coords(&g.z);
        let (u, ud) = self.eval_l(&y, x.t)?;
        let data = self.model.data();
        let two_v_u: Vec<f64> = x.v.iter().zip(&u).map(|(v, u)| 2.0 * v + u).collect();
        Ok(ManifoldPoint::new(
            x.t + g.k as f64 * data.p,
            x.s + g.l as f64 * self.theta - data.inner(&ud, &two_v_u),
            x.v.iter().zip(&u).map(|(v, u)| v + u).collect(),
        ))
    }

    /// Real lattice coordinates of the element of 𝓛 through `v` at time `t`.
    pub fn lattice_coords_at(&self, v: &[f64], t: f64) -> Result<Vec<f64>> {
        let y = self.model.l_with_value_at(v, t)?;
        Ok(self.lattice.lattice_coords(&y.pos))
    }

    /// `w ↦ w(t)` on 𝓛 in lattice coordinates: `diag(exp ∫₀ᵗ B) S`.
    pub fn evaluation_matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        let b = self.model.data().curve()?;
        let scale = DVector::from_iterator(self.m(), (0..self.m()).map(|i| b.integral(i, t).exp()));
        Ok(DMatrix::from_diagonal(&scale) * self.lattice.change_of_basis())
    }

    pub fn in_domain(&self, x: &ManifoldPoint) -> Result<bool> {
        let p = self.model.data().p;
        let inside = |v: f64| (-SNAP..1.0 - SNAP).contains(&v);
        Ok(inside(x.t / p)
            && inside(x.s / self.theta)
            && self.lattice_coords_at(&x.v, x.t)?.into_iter().all(inside))
    }

    /// `γ` with `γ·x` in the fundamental domain: shift `t` into `[0,p)`,
    /// reduce the element of 𝓛 through `v` modulo Λ, then shift `s` into
    /// `[0,θ)`.
    pub fn canonicalize(&self, x: &ManifoldPoint) -> Result<(GammaElement, ManifoldPoint)> {
        let p = self.model.data().p;
        let k = -to_i64(floor_snapped(x.t / p))?;
        let step1 = GammaElement::new(k, 0, vec![0; self.m()]);
        let x1 = ManifoldPoint::new(x.t + k as f64 * p, x.s, x.v.clone());

        let coords = self.lattice_coords_at(&x1.v, x1.t)?;
        let z = coords
            .iter()
            .map(|&c| to_i64(-floor_snapped(c)))
            .collect::<Result<Vec<i64>>>()?;
        let step2 = GammaElement::new(0, 0, z);
        let x2 = self.gamma_act(&step2, &x1)?;

        let l = -to_i64(floor_snapped(x2.s / self.theta))?;
        let step3 = GammaElement::new(0, l, vec![0; self.m()]);
        let x3 = ManifoldPoint::new(x2.t, x2.s + l as f64 * self.theta, x2.v.clone());

        let gamma = self.compose(&step3, &self.compose(&step2, &step1)?)?;
        Ok((gamma, x3))
    }

    /// Coverage and idempotence for random points in the box `|t| ≤ 10p`,
    /// `|s| ≤ 20`, `|v| ≤ 5`; orbit invariance and reconstruction for points
    /// with `|t| ≤ 2p`. Elements of Λ grow like `λᵢ^{±t/p}`, so far from the
    /// domain the `s` update cancels terms beyond double precision.
    pub fn canonicalization_report<R: Rng>(&self, trials: usize, rng: &mut R) -> Result<Report> {
        let p = self.model.data().p;
        let m = self.m();
        let point = |rng: &mut R, tmax: f64| {
            ManifoldPoint::new(
                rng.gen_range(-tmax * p..tmax * p),
                rng.gen_range(-20.0..20.0),
                (0..m).map(|_| rng.gen_range(-5.0..5.0)).collect(),
            )
        };
        let (mut outside, mut not_idempotent) = (0usize, 0usize);
        for _ in 0..trials {
            let (_, canon) = self.canonicalize(&point(rng, 10.0))?;
            if !self.in_domain(&canon)? {
                outside += 1;
            }
            let (again, same) = self.canonicalize(&canon)?;
            if !again.is_identity() || same != canon {
                not_idempotent += 1;
            }
        }
        let (mut orbit, mut rebuild) = (0.0f64, 0.0f64);
        for _ in 0..trials {
            let x = point(rng, 2.0);
            let (gamma, canon) = self.canonicalize(&x)?;
            rebuild = rebuild.max(relative_diff(&canon.to_chart(), &self.gamma_act(&gamma, &x)?.to_chart()));
            let g0 = GammaElement::random(m, 2, rng);
            let (_, canon2) = self.canonicalize(&self.gamma_act(&g0, &x)?)?;
            orbit = orbit.max(relative_diff(&canon.to_chart(), &canon2.to_chart()));
        }
        let mut report = Report::new();
        report.push(Check::below("canonical points outside the domain", outside as f64, 0.5));
        report.push(Check::below("canonicalize not idempotent", not_idempotent as f64, 0.5));
        report.push(Check::below("orbit invariance of canonical point", orbit, 1e-8));
        report.push(Check::below("gamma . x reproduces canonical point", rebuild, 1e-8));
        report.note(format!(
            "{trials} points with |t| <= 10p for coverage, {trials} with |t| <= 2p for invariance; half-open domain, snapping {SNAP:e}"
        ));
        Ok(report)
    }

    fn random_domain_point<R: Rng>(&self, rng: &mut R) -> Result<ManifoldPoint> {
        let p = self.model.data().p;
        let t = rng.gen_range(0.0..p);
        let c = DVector::from_iterator(self.m(), (0..self.m()).map(|_| rng.gen_range(0.0..1.0)));
        let v = self.evaluation_matrix(t)? * c;
        Ok(ManifoldPoint::new(t, rng.gen_range(0.0..self.theta), v.iter().copied().collect()))
    }

    fn displacement(&self, g: &GammaElement, x: &ManifoldPoint) -> Result<f64> {
        let y = self.gamma_act(g, x)?;
        Ok(x.to_chart()
            .iter()
            .zip(y.to_chart())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt())
    }

    /// No nonidentity `γ` fixes a point, and the evaluation map of 𝓛 is
    /// invertible, which is what forces `u(t) = 0 ⇒ u = 0`.
    pub fn freeness_check<R: Rng>(&self, trials: usize, rng: &mut R) -> Result<Report> {
        let m = self.m();
        let mut min_disp = f64::INFINITY;
        for _ in 0..trials {
            let g = loop {
                let g = GammaElement::random(m, 2, rng);
                if !g.is_identity() {
                    break g;
                }
            };
            min_disp = min_disp.min(self.displacement(&g, &self.random_domain_point(rng)?)?);
        }
        let p = self.model.data().p;
        let shift = self.displacement(&GammaElement::new(1, 0, vec![0; m]), &self.random_domain_point(rng)?)?;
        let mut min_gen = f64::INFINITY;
        let mut worst_cond = 0.0f64;
        for _ in 0..20 {
            let t = rng.gen_range(-2.0 * p..2.0 * p);
            for j in 0..m {
                let mut z = vec![0; m];
                z[j] = 1;
                let (u, _) = self.eval_l(&self.lattice.channel_coords(&z), t)?;
                min_gen = min_gen.min(u.iter().map(|x| x * x).sum::<f64>().sqrt());
            }
            worst_cond = worst_cond.max(condition(&self.evaluation_matrix(t)?));
        }
        let mut report = Report::new();
        report.push(Check::above("min |gamma.x - x| over random nonidentity gamma", min_disp, 1e-10));
        report.push(Check::below("|(1,0,0).x - x| - p", (shift - p).abs(), 1e-12));
        report.push(Check::above("min |u(t)| over lattice generators", min_gen, 0.0));
        report.push(Check::below("evaluation map condition on L", worst_cond, MAX_EVALUATION_CONDITION));
        report.note("u(t) = 0 => u = 0 is evidenced by invertibility of the evaluation map, not proved");
        Ok(report)
    }

    /// Nonidentity elements of word length at most `len` in the generators
    /// `(±1,0,0)`, `(0,±1,0)`, `(0,0,±eᵢ)`.
    pub fn words(&self, len: usize) -> Result<Vec<GammaElement>> {
        let m = self.m();
        let mut gens = Vec::new();
        for sign in [1, -1] {
            gens.push(GammaElement::new(sign, 0, vec![0; m]));
            gens.push(GammaElement::new(0, sign, vec![0; m]));
            for i in 0..m {
                let mut z = vec![0; m];
                z[i] = sign;
                gens.push(GammaElement::new(0, 0, z));
            }
        }
        let mut seen = BTreeSet::new();
        seen.insert(GammaElement::identity(m));
        let mut frontier = vec![GammaElement::identity(m)];
        for _ in 0..len {
            let mut next = Vec::new();
            for w in &frontier {
                for g in &gens {
                    let c = self.compose(w, g)?;
                    if seen.insert(c.clone()) {
                        next.push(c);
                    }
                }
            }
            frontier = next;
        }
        Ok(seen.into_iter().filter(|g| !g.is_identity()).collect())
    }

    /// Minimum chart displacement over nonidentity words of length ≤ 3 and
    /// sample points of the fundamental domain, plus the two sequence cases
    /// of the convergence criterion.
    pub fn proper_discontinuity_check<R: Rng>(&self, trials: usize, rng: &mut R) -> Result<Report> {
        let words = self.words(3)?;
        let points = (0..trials)
            .map(|_| self.random_domain_point(rng))
            .collect::<Result<Vec<_>>>()?;
        let mut separation = f64::INFINITY;
        for g in &words {
            for x in &points {
                separation = separation.min(self.displacement(g, x)?);
            }
        }
        // Alternating between two distinct elements at a fixed point: the
        // images stay apart, so the sequence cannot converge.
        let mut alternating = f64::INFINITY;
        for pair in words.windows(2).take(50) {
            let x = &points[0];
            let (a, b) = (self.gamma_act(&pair[0], x)?, self.gamma_act(&pair[1], x)?);
            alternating = alternating.min(
                a.to_chart()
                    .iter()
                    .zip(b.to_chart())
                    .map(|(p, q)| (p - q).powi(2))
                    .sum::<f64>()
                    .sqrt(),
            );
        }
        let mut report = Report::new();
        report.push(Check::above("separation over word length <= 3", separation, 0.01));
        report.push(Check::above("discreteness alarm threshold", separation, 1e-10));
        report.push(Check::above("alternating sequence gap", alternating, 1e-10));
        report.note(format!("{} words, {} domain points", words.len(), points.len()));
        Ok(report)
    }

    /// The fibre over `t`: `{0} × ℝ × 𝓛` is abelian, evaluation at `t` is
    /// a bijection onto `V`, and `Σ` spans a lattice in it.
    pub fn torus_fiber_check<R: Rng>(&self, t: f64, trials: usize, rng: &mut R) -> Result<Report> {
        let m = self.m();
        let mut worst = 0.0f64;
        for _ in 0..trials {
            let mut draw = || -> Result<GroupElement> {
                let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
                Ok(GroupElement::new(0, rng.gen_range(-2.0..2.0), self.model.embed_l(&SolutionL { pos: y })?))
            };
            let (a, b) = (draw()?, draw()?);
            let c = commutator(&self.model, &a, &b)?;
            worst = worst.max(relative_diff(&GroupElement::identity(m).components(), &c.components()));
        }
        let cond = condition(&self.evaluation_matrix(t)?);
        let det = self.lattice.change_of_basis().determinant().abs() * self.theta;
        let mut report = Report::new();
        report.push(Check::below("commutators in {0} x R x L", worst, 1e-9));
        report.push(Check::below("evaluation map condition at t", cond, MAX_EVALUATION_CONDITION));
        report.push(Check::above("covolume of Sigma generators", det, 1e-12));
        Ok(report)
    }
}

/// `aba⁻¹b⁻¹`.
pub fn commutator(model: &Model, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
    let ab = group_op(model, a, b)?;
    let ab_ainv = group_op(model, &ab, &inverse(model, a)?)?;
    group_op(model, &ab_ainv, &inverse(model, b)?)
}

fn condition(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().singular_values();
    sv.max() / sv.min()
}

/// `Tᵏ ≠ Id` for `1 ≤ |k| ≤ kmax`: the premise of the cited argument that
/// the torus bundle is nontrivial. Evidence only.
pub fn bundle_nontriviality_evidence(lattice: &LatticeBasis, kmax: u32) -> Report {
    let mut report = check_t_nontrivial(lattice, kmax);
    report.note("machine-checked premise of the nontriviality argument, not a proof");
    report
}

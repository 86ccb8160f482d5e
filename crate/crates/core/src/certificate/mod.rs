//! End-to-end construction, the certificate document, and re-verification
//! of a stored certificate from its recorded inputs.

mod sweep;

pub use sweep::{sweep, SweepCell, SweepResult, SweepSpec};

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EcsError, Result};
use crate::geometry::{
    christoffel_at, christoffel_fd, curvature_report, geodesic, geodesic_generic, homogeneity_obstruction,
    metric_compatibility, olszak_test, sample_points, GeodesicOptions, ManifoldPoint, Trajectory,
};
use crate::group::{
    bundle_nontriviality_evidence, group_axioms_report, isometry_check, isometry_suite, FundamentalDomain,
    GroupElement, Quotient,
};
use crate::integrate::Dopri5;
use crate::model::{ModelData, Signature};
use crate::ode::{lattice_for, Model, SolutionE, SolutionL, DEFAULT_FLOW_STEPS, MAX_CONDITION};
use crate::polynomial::{compose_for_dimension, isolate_roots, GlzPolynomial, IntMatrix, Spectrum};
use crate::profile::{FourierTerm, PeriodicProfile};
use crate::report::{Check, Report};
use crate::spectral::{
    calibrate, multipliers, necessity_check_parts, seed_constant, solve_periodic_riccati, spectrum_of,
    CalibrationOptions, DiagonalCurve, ResidualReport, StepPolicy, TracelessDiag,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Sample counts for every verification suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerificationConfig {
    pub christoffel_points: usize,
    pub curvature_points: usize,
    pub olszak_points: usize,
    pub homogeneity_samples: usize,
    pub geodesics: usize,
    pub geodesic_span_periods: f64,
    pub geodesic_samples: usize,
    pub consistency_pairs: usize,
    pub group_trials: usize,
    pub isometry_elements: usize,
    pub isometry_points: usize,
    pub canonicalize_points: usize,
    pub freeness_trials: usize,
    pub discontinuity_points: usize,
    pub torus_times: usize,
    pub kmax: u32,
}

impl Default for VerificationConfig {
    fn default() -> Self {
        VerificationConfig {
            christoffel_points: 20,
            curvature_points: 20,
            olszak_points: 20,
            homogeneity_samples: 4096,
            geodesics: 5,
            geodesic_span_periods: 100.0,
            geodesic_samples: 50,
            consistency_pairs: 10,
            group_trials: 100,
            isometry_elements: 100,
            isometry_points: 10,
            canonicalize_points: 1000,
            freeness_trials: 100,
            discontinuity_points: 50,
            torus_times: 10,
            kmax: 20,
        }
    }
}

impl VerificationConfig {
    /// Smaller samples for sweeps and smoke runs.
    pub fn quick() -> Self {
        VerificationConfig {
            christoffel_points: 5,
            curvature_points: 4,
            olszak_points: 5,
            homogeneity_samples: 1024,
            geodesics: 1,
            geodesic_span_periods: 10.0,
            geodesic_samples: 20,
            consistency_pairs: 3,
            group_trials: 20,
            isometry_elements: 5,
            isometry_points: 10,
            canonicalize_points: 100,
            freeness_trials: 20,
            discontinuity_points: 10,
            torus_times: 3,
            kmax: 20,
        }
    }
}

/// Tolerances of the checks assembled here. Suites in other modules carry
/// their own thresholds inside each recorded check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub trace: f64,
    pub spectrum: f64,
    pub periodicity: f64,
    pub ode_residual: f64,
    pub reintegration: f64,
    pub lattice: f64,
    pub christoffel: f64,
    pub metric_compatibility: f64,
    pub geodesic_agreement: f64,
    pub geodesic_drift: f64,
    pub homogeneity: f64,
    pub necessity: f64,
    /// Allowed drift of a re-verified measurement, in units of its tolerance.
    pub reproduction_factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            trace: 1e-13,
            spectrum: 1e-9,
            periodicity: 1e-11,
            ode_residual: 1e-8,
            reintegration: 1e-8,
            lattice: 1e-7,
            christoffel: 1e-6,
            metric_compatibility: 1e-6,
            geodesic_agreement: 1e-6,
            geodesic_drift: 1e-8,
            homogeneity: 1e-3,
            necessity: 1e-8,
            reproduction_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildConfig {
    pub n: usize,
    pub signature: Signature,
    pub p: f64,
    pub theta: f64,
    /// Defaults to the composed polynomial for `m = n − 2`.
    pub polynomial: Option<GlzPolynomial>,
    /// Nonconstant part of the initial `f`; its mean comes from the seed.
    pub perturbation: Vec<FourierTerm>,
    pub seed: u64,
    pub step_policy: StepPolicy,
    pub flow_steps: usize,
    pub verification: VerificationConfig,
    pub tolerances: Tolerances,
}

impl BuildConfig {
    pub fn new(n: usize, signature: Signature, p: f64, theta: f64) -> Self {
        BuildConfig {
            n,
            signature,
            p,
            theta,
            polynomial: None,
            perturbation: vec![FourierTerm { k: 1, cos: 0.05, sin: 0.0 }],
            seed: 0,
            step_policy: StepPolicy::default(),
            flow_steps: DEFAULT_FLOW_STEPS,
            verification: VerificationConfig::default(),
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inputs {
    pub n: usize,
    pub p: f64,
    pub theta: f64,
    pub signature: Signature,
    pub polynomial: GlzPolynomial,
    pub target_spectrum: Vec<f64>,
    /// `f` before calibration adjusts its mean.
    pub f_initial: PeriodicProfile,
    pub seed: u64,
    pub step_policy: StepPolicy,
    pub flow_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeRecord {
    /// `S` row-major; row `i` is `(1, λᵢ, …, λᵢ^{m−1})`.
    pub change_of_basis: Vec<Vec<f64>>,
    pub t_matrix: Vec<Vec<i64>>,
    pub condition: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub f: PeriodicProfile,
    /// Stored unvalidated so that a corrupted file fails a check rather than
    /// the parser.
    pub a: Vec<f64>,
    pub b_initial: Vec<f64>,
    pub b_period_integrals: Vec<f64>,
    /// Sidecar CSV of `B` samples, relative to the certificate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_samples: Option<String>,
    pub multipliers: Vec<f64>,
    pub lattice: Option<LatticeRecord>,
    pub fundamental_domain: Option<FundamentalDomain>,
    pub calibration: Option<ResidualReport>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Sections {
    pub polynomial: Report,
    pub spectral: Report,
    pub ode: Report,
    pub geometry: Report,
    pub group: Report,
    pub quotient: Report,
}

impl Sections {
    pub fn named(&self) -> [(&'static str, &Report); 6] {
        [
            ("polynomial", &self.polynomial),
            ("spectral", &self.spectral),
            ("ode", &self.ode),
            ("geometry", &self.geometry),
            ("group", &self.group),
            ("quotient", &self.quotient),
        ]
    }

    pub fn passed(&self) -> bool {
        self.named().iter().all(|(_, r)| r.passed())
    }

    pub fn failures(&self) -> Vec<(&'static str, &Check)> {
        self.named()
            .into_iter()
            .flat_map(|(s, r)| r.failures().map(move |c| (s, c)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub step_policy: StepPolicy,
    pub riccati_steps: usize,
    pub flow_steps: usize,
    pub newton_iterations: Vec<usize>,
    pub domain_convention: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub schema_version: u32,
    pub inputs: Inputs,
    pub artifacts: Artifacts,
    pub tolerances: Tolerances,
    pub verification: VerificationConfig,
    pub sections: Sections,
    pub pass: bool,
    pub provenance: Provenance,
}

impl Certificate {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cert: Certificate = serde_json::from_str(text)?;
        if cert.schema_version != SCHEMA_VERSION {
            return Err(EcsError::Schema(format!(
                "schema version {} (expected {SCHEMA_VERSION})",
                cert.schema_version
            )));
        }
        Ok(cert)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Certificate::from_json(&fs::read_to_string(path)?)
    }
}

/// A certificate together with the live objects it was computed from.
#[derive(Debug, Clone)]
pub struct Built {
    pub certificate: Certificate,
    pub quotient: Option<Quotient>,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn sidecar_name(path: &Path) -> String {
    let stem = path.file_stem().map_or("certificate".into(), |s| s.to_string_lossy().into_owned());
    format!("{stem}.b.csv")
}

fn csv_error(e: csv::Error) -> EcsError {
    EcsError::Io(e.to_string())
}

/// Samples of `B` over one period: `t, b1..bm, int_b1..int_bm`.
pub fn b_samples_csv(b: &DiagonalCurve, count: usize) -> Result<Vec<u8>> {
    let m = b.channels();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    header.extend((1..=m).map(|i| format!("b{i}")));
    header.extend((1..=m).map(|i| format!("int_b{i}")));
    w.write_record(&header).map_err(csv_error)?;
    for j in 0..count {
        let t = b.period() * j as f64 / count as f64;
        let mut row = vec![t];
        row.extend((0..m).map(|i| b.value(i, t)));
        row.extend((0..m).map(|i| b.integral(i, t)));
        w.write_record(row.iter().map(|x| x.to_string())).map_err(csv_error)?;
    }
    w.into_inner().map_err(|e| EcsError::Io(e.to_string()))
}

fn read_b_samples(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    r.records()
        .map(|rec| {
            rec.map_err(csv_error)?
                .iter()
                .map(|x| x.parse::<f64>().map_err(|e| EcsError::Schema(format!("{path:?}: {e}"))))
                .collect()
        })
        .collect()
}

/// Writes the certificate and its `B` sidecar next to it.
pub fn save(built: &mut Built, path: &Path) -> Result<()> {
    if let Some(q) = &built.quotient {
        let name = sidecar_name(path);
        let dir = path.parent().unwrap_or(Path::new("."));
        write_atomic(&dir.join(&name), &b_samples_csv(q.model().data().curve()?, 256)?)?;
        built.certificate.artifacts.b_samples = Some(name);
    }
    write_atomic(path, built.certificate.to_json()?.as_bytes())
}

/// Full pipeline: polynomial, roots, constant seed, calibration, lattice and
/// every verification suite.
pub fn build_manifold(cfg: &BuildConfig) -> Result<Built> {
    if cfg.n < 5 {
        return Err(EcsError::ParameterDomain(format!("the construction requires n >= 5, got {}", cfg.n)));
    }
    let m = cfg.n - 2;
    if cfg.signature.len() != m {
        return Err(EcsError::ParameterDomain(format!(
            "signature of length {} for n = {}",
            cfg.signature.len(),
            cfg.n
        )));
    }
    if !(cfg.theta.is_finite() && cfg.theta > 0.0) {
        return Err(EcsError::ParameterDomain(format!("theta = {} is not positive", cfg.theta)));
    }
    let polynomial = match &cfg.polynomial {
        Some(p) => p.clone(),
        None => compose_for_dimension(m).map_err(|e| e.at_stage("polynomial"))?,
    };
    if polynomial.degree() != m {
        return Err(EcsError::ParameterDomain(format!(
            "polynomial of degree {} for m = {m}",
            polynomial.degree()
        )));
    }
    let target = isolate_roots(&polynomial).map_err(|e| e.at_stage("polynomial"))?.spectrum;
    let seed = seed_constant(&target, cfg.p).map_err(|e| e.at_stage("spectral"))?;
    let f0 = PeriodicProfile::new(cfg.p, seed.h, cfg.perturbation.clone())?;
    let inputs = Inputs {
        n: cfg.n,
        p: cfg.p,
        theta: cfg.theta,
        signature: cfg.signature.clone(),
        polynomial,
        target_spectrum: target.values().to_vec(),
        f_initial: f0,
        seed: cfg.seed,
        step_policy: cfg.step_policy,
        flow_steps: cfg.flow_steps,
    };
    certify(inputs, &cfg.verification, &cfg.tolerances)
}

/// Calibrates from `inputs.f_initial` and runs every suite.
fn certify(inputs: Inputs, verification: &VerificationConfig, tolerances: &Tolerances) -> Result<Built> {
    inputs.f_initial.require_nonconstant()?;
    let target = Spectrum::measured(inputs.target_spectrum.clone());
    let seed = seed_constant(&target, inputs.p).map_err(|e| e.at_stage("spectral"))?;
    let opts = CalibrationOptions {
        policy: inputs.step_policy,
        ..CalibrationOptions::default()
    };
    let sol = calibrate(&inputs.f_initial, &target, &seed, &opts).map_err(|e| e.at_stage("spectral"))?;
    let checked = run_checks(&inputs, &sol.f, sol.a.entries(), &sol.b.initial(), verification, tolerances)?;
    let mut artifacts = checked.artifacts(&sol.f, sol.a.entries(), &sol.b.initial());
    artifacts.calibration = Some(sol.residual.clone());
    let certificate = Certificate {
        schema_version: SCHEMA_VERSION,
        provenance: Provenance {
            seed: inputs.seed,
            step_policy: inputs.step_policy,
            riccati_steps: sol.residual.steps,
            flow_steps: inputs.flow_steps,
            newton_iterations: sol.residual.newton_iterations.clone(),
            domain_convention: "half-open: t in [0,p), s in [0,theta), lattice coordinates in [0,1)^m".into(),
            version: env!("CARGO_PKG_VERSION").into(),
        },
        inputs,
        artifacts,
        tolerances: *tolerances,
        verification: *verification,
        pass: checked.sections.passed(),
        sections: checked.sections,
    };
    Ok(Built {
        certificate,
        quotient: checked.quotient,
    })
}

struct Checked {
    sections: Sections,
    quotient: Option<Quotient>,
}

impl Checked {
    fn artifacts(&self, f: &PeriodicProfile, a: &[f64], b_initial: &[f64]) -> Artifacts {
        let mut art = Artifacts {
            f: f.clone(),
            a: a.to_vec(),
            b_initial: b_initial.to_vec(),
            b_period_integrals: Vec::new(),
            b_samples: None,
            multipliers: Vec::new(),
            lattice: None,
            fundamental_domain: None,
            calibration: None,
        };
        if let Some(q) = &self.quotient {
            if let Ok(b) = q.model().data().curve() {
                art.b_initial = b.initial();
                art.b_period_integrals = b.period_integrals();
                art.multipliers = multipliers(b);
            }
            let lat = q.lattice();
            let s = lat.change_of_basis();
            art.lattice = Some(LatticeRecord {
                change_of_basis: (0..s.nrows()).map(|i| s.row(i).iter().copied().collect()).collect(),
                t_matrix: lat.companion().rows(),
                condition: lat.condition(),
            });
            art.fundamental_domain = Some(q.domain());
        }
        art
    }
}

fn polynomial_section(p: &GlzPolynomial) -> Result<Report> {
    let m = p.degree();
    let mut r = Report::new();
    let sign = if m.is_multiple_of(2) { 1 } else { -1 };
    r.push(Check::holds("leading coefficient is (-1)^m", p.leading() == sign));
    r.push(Check::holds("constant term is +-1", p.constant().abs() == 1));
    let iso = isolate_roots(p)?;
    r.push(Check::holds("m real roots isolated", iso.spectrum.len() == m));
    r.push(Check::holds(
        "root brackets show exact sign changes",
        iso.brackets.iter().all(|b| b.verify(p)),
    ));
    let values = iso.spectrum.values();
    let min_gap = values.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    r.push(Check::above("min gap between roots", min_gap, 0.0));
    r.push(Check::above("min root", values[0], 0.0));
    let unit = values.iter().map(|l| (l - 1.0).abs()).fold(f64::INFINITY, f64::min);
    r.push(Check::above("min |lambda - 1|", unit, 0.0));
    let c = IntMatrix::companion(p);
    r.push(Check::holds("companion determinant is +-1", c.unimodular_inverse().is_some()));
    r.push(Check::holds("companion characteristic polynomial is P", c.char_poly() == p.coefficients()));
    Ok(r)
}

fn spectral_gate(f: &PeriodicProfile, a: &[f64], m: usize, tol: &Tolerances) -> Report {
    let mut r = Report::new();
    r.push(Check::holds("A has m entries", a.len() == m));
    r.push(Check::below("|trace A|", a.iter().sum::<f64>().abs(), tol.trace));
    r.push(Check::above("max |a_i|", a.iter().fold(0.0f64, |x, y| x.max(y.abs())), 1e-8));
    let constant = PeriodicProfile::constant(f.period, f.mean);
    let spread = constant.and_then(|c| f.l2_distance(&c)).unwrap_or(f64::NAN);
    r.push(Check::above("L2 distance of f from its mean", spread, 0.0));
    r
}

/// One period of `(b, ∫b)` by adaptive DP45, independent of the fixed-step
/// solver.
fn reintegrate(f: &PeriodicProfile, a: f64, b0: f64) -> Result<(f64, f64)> {
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = f.value(t) + a - y[0] * y[0];
        dy[1] = y[0];
    };
    let mut y = [b0, 0.0];
    Dopri5::new(1e-13, 1e-15).integrate(&rhs, 0.0, f.period, &mut y)?;
    Ok((y[0], y[1]))
}

fn spectral_section(
    inputs: &Inputs,
    f: &PeriodicProfile,
    a: &[f64],
    b_initial: &[f64],
    tol: &Tolerances,
    r: &mut Report,
) -> Result<DiagonalCurve> {
    let b = solve_periodic_riccati(f, a, b_initial, inputs.step_policy)?;
    let target = Spectrum::measured(inputs.target_spectrum.clone());
    r.push(Check::below("spectrum error", spectrum_of(&b).max_abs_diff(&target), tol.spectrum));
    r.push(Check::below("B periodicity gap", b.periodicity_gap(), tol.periodicity));
    r.push(Check::below("B ODE residual", b.ode_residual(), tol.ode_residual));
    let integrals = b.period_integrals();
    let (mut gap, mut int) = (0.0f64, 0.0f64);
    for (i, &b0) in b.initial().iter().enumerate() {
        let (bp, ip) = reintegrate(f, a[i], b0)?;
        gap = gap.max((bp - b0).abs());
        int = int.max((ip - integrals[i]).abs());
    }
    r.push(Check::below("DP45 periodicity of b(0)", gap, tol.reintegration));
    r.push(Check::below("DP45 period integral of B", int, tol.reintegration));
    r.extend(necessity_check_parts(a, &multipliers(&b), tol.necessity));
    Ok(b)
}

fn random_solution<R: Rng>(m: usize, rng: &mut R) -> SolutionE {
    SolutionE::new(
        (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
}

/// A random geodesic through the slab `t ∈ [0,p)`, integrated both ways.
pub fn geodesic_sample<R: Rng>(
    model: &Model,
    span_periods: f64,
    samples: usize,
    rng: &mut R,
) -> Result<(Trajectory, Trajectory)> {
    let data = model.data();
    let q0 = ManifoldPoint::new(
        rng.gen_range(0.0..data.p),
        rng.gen_range(-1.0..1.0),
        (0..data.m()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    );
    let qd: Vec<f64> = (0..data.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let span = (-span_periods * data.p, span_periods * data.p);
    let opts = GeodesicOptions {
        samples,
        ..GeodesicOptions::default()
    };
    Ok((
        geodesic(model, &q0, &qd, span, &opts)?,
        geodesic_generic(model, &q0, &qd, span, &opts, 1e-12)?,
    ))
}

fn geometry_section<R: Rng>(model: &Model, cfg: &VerificationConfig, tol: &Tolerances, rng: &mut R) -> Result<Report> {
    let data = model.data();
    let mut r = Report::new();
    let pts = sample_points(data, cfg.christoffel_points, rng);
    let fd = pts
        .iter()
        .map(|q| christoffel_at(data, q).max_abs_diff(&christoffel_fd(data, &q.to_chart())))
        .fold(0.0, f64::max);
    r.push(Check::below("analytic vs differenced Christoffels", fd, tol.christoffel));
    let charts: Vec<Vec<f64>> = pts.iter().map(|q| q.to_chart()).collect();
    r.push(Check::below(
        "metric compatibility |grad g|",
        metric_compatibility(data, &charts),
        tol.metric_compatibility,
    ));
    r.extend(curvature_report(data, &sample_points(data, cfg.curvature_points, rng)).report);
    let charts: Vec<Vec<f64>> = sample_points(data, cfg.olszak_points, rng)
        .iter()
        .map(|q| q.to_chart())
        .collect();
    r.extend(olszak_test(data, &charts));
    let o = homogeneity_obstruction(&data.f, cfg.homogeneity_samples)?;
    r.push(Check::above("variation of (|f|^-1/2)'", o.variation, tol.homogeneity));
    let (mut agree, mut drift) = (0.0f64, 0.0f64);
    for _ in 0..cfg.geodesics {
        let (s, g) = geodesic_sample(model, cfg.geodesic_span_periods, cfg.geodesic_samples, rng)?;
        agree = agree.max(s.max_relative_diff(&g));
        drift = drift.max(s.energy_drift()).max(g.energy_drift());
    }
    if cfg.geodesics > 0 {
        r.push(Check::below("structured vs generic geodesics (relative)", agree, tol.geodesic_agreement));
        r.push(Check::below("g(gamma', gamma') drift (relative)", drift, tol.geodesic_drift));
        r.note(format!(
            "{} geodesics over [-{}p, {}p]",
            cfg.geodesics, cfg.geodesic_span_periods, cfg.geodesic_span_periods
        ));
    }
    Ok(r)
}

fn prefixed(report: Report, prefix: &str) -> Report {
    Report {
        checks: report
            .checks
            .into_iter()
            .map(|mut c| {
                c.name = format!("{prefix}: {}", c.name);
                c
            })
            .collect(),
        notes: report.notes,
    }
}

fn group_section<R: Rng>(model: &Model, cfg: &VerificationConfig, rng: &mut R) -> Result<Report> {
    let m = model.m();
    let mut r = group_axioms_report(model, cfg.group_trials, rng)?;
    let pts = sample_points(model.data(), cfg.isometry_points.max(10), rng);
    r.extend(prefixed(isometry_check(model, &GroupElement::translation(1, m), &pts)?, "(1,0,0)"));
    r.extend(prefixed(
        isometry_check(model, &GroupElement::new(0, 0.7, SolutionE::zero(m)), &pts)?,
        "(0,q,0)",
    ));
    r.extend(prefixed(isometry_suite(model, cfg.isometry_elements, &pts, rng)?, "random"));
    Ok(r)
}

fn quotient_section<R: Rng>(q: &Quotient, cfg: &VerificationConfig, rng: &mut R) -> Result<Report> {
    let p = q.model().data().p;
    let mut r = q.canonicalization_report(cfg.canonicalize_points, rng)?;
    r.extend(q.freeness_check(cfg.freeness_trials, rng)?);
    r.extend(q.proper_discontinuity_check(cfg.discontinuity_points, rng)?);
    let fibres = (0..cfg.torus_times)
        .map(|j| q.torus_fiber_check(p * j as f64 / cfg.torus_times as f64, 10, rng))
        .collect::<Result<Vec<_>>>()?;
    r.extend(Report::worst_of(fibres));
    r.extend(bundle_nontriviality_evidence(q.lattice(), cfg.kmax));
    Ok(r)
}

fn skipped(reason: &str) -> Report {
    let mut r = Report::new();
    r.note(format!("skipped: {reason}"));
    r
}

fn run_checks(
    inputs: &Inputs,
    f: &PeriodicProfile,
    a: &[f64],
    b_initial: &[f64],
    cfg: &VerificationConfig,
    tol: &Tolerances,
) -> Result<Checked> {
    let m = inputs.n.saturating_sub(2);
    let mut sections = Sections {
        polynomial: polynomial_section(&inputs.polynomial).map_err(|e| e.at_stage("polynomial"))?,
        ..Sections::default()
    };
    let gate = spectral_gate(f, a, m, tol);
    let gate_ok = gate.passed() && inputs.signature.len() == m && b_initial.len() == m;
    sections.spectral = gate;
    if !gate_ok {
        for s in [&mut sections.ode, &mut sections.geometry, &mut sections.group, &mut sections.quotient] {
            *s = skipped("model data failed the spectral gate");
        }
        return Ok(Checked { sections, quotient: None });
    }
    let b = spectral_section(inputs, f, a, b_initial, tol, &mut sections.spectral).map_err(|e| e.at_stage("spectral"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(inputs.seed);
    let lattice = lattice_for(&b, &inputs.polynomial).map_err(|e| e.at_stage("ode"))?;
    let data = ModelData::new(inputs.signature.clone(), f.clone(), TracelessDiag::new(a.to_vec())?, Some(b))
        .map_err(|e| e.at_stage("ode"))?;
    let model = Model::with_steps(data, inputs.flow_steps);
    let mut ode = Report::new();
    ode.push(Check::below("char poly of T on L vs P", lattice.char_poly_error(), tol.lattice));
    ode.push(Check::below("T in lattice coordinates vs integer matrix", lattice.t_matrix_error(), tol.lattice));
    ode.push(Check::holds("|det T| = 1", lattice.companion().unimodular_inverse().is_some()));
    ode.push(Check::below("lattice basis condition", lattice.condition(), MAX_CONDITION));
    let pairs: Vec<(SolutionE, SolutionE)> = (0..cfg.consistency_pairs)
        .map(|_| (random_solution(m, &mut rng), random_solution(m, &mut rng)))
        .collect();
    let mut ls = lattice.generators();
    ls.push(SolutionL {
        pos: (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    });
    ode.extend(model.consistency_report(&pairs, &ls).map_err(|e| e.at_stage("ode"))?);
    sections.ode = ode;

    sections.geometry = geometry_section(&model, cfg, tol, &mut rng).map_err(|e| e.at_stage("geometry"))?;
    sections.group = group_section(&model, cfg, &mut rng).map_err(|e| e.at_stage("group"))?;
    let quotient = Quotient::new(model, lattice, inputs.theta).map_err(|e| e.at_stage("quotient"))?;
    sections.quotient = quotient_section(&quotient, cfg, &mut rng).map_err(|e| e.at_stage("quotient"))?;
    Ok(Checked {
        sections,
        quotient: Some(quotient),
    })
}

/// Rebuilds the live quotient from a certificate's stored data, without
/// running the verification suites.
pub fn reconstruct(cert: &Certificate) -> Result<Quotient> {
    let inputs = &cert.inputs;
    let art = &cert.artifacts;
    let b = solve_periodic_riccati(&art.f, &art.a, &art.b_initial, inputs.step_policy)?;
    let lattice = lattice_for(&b, &inputs.polynomial)?;
    let data = ModelData::new(inputs.signature.clone(), art.f.clone(), TracelessDiag::new(art.a.clone())?, Some(b))?;
    Quotient::new(Model::with_steps(data, inputs.flow_steps), lattice, inputs.theta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub sections: Sections,
    pub reproduction: Report,
    pub pass: bool,
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Re-executes every check from the stored inputs and data, and compares
/// the fresh measurements with the stored ones. `dir` locates the sidecar.
pub fn verify(cert: &Certificate, dir: Option<&Path>) -> Result<Verification> {
    if cert.schema_version != SCHEMA_VERSION {
        return Err(EcsError::Schema(format!("schema version {}", cert.schema_version)));
    }
    let art = &cert.artifacts;
    let checked = run_checks(&cert.inputs, &art.f, &art.a, &art.b_initial, &cert.verification, &cert.tolerances)?;
    let tol = &cert.tolerances;
    let mut rep = Report::new();
    rep.push(Check::holds(
        "stored pass flag is the conjunction of its sections",
        cert.pass == cert.sections.passed(),
    ));
    let mut same_set = true;
    let mut drift = 0.0f64;
    for ((_, old), (_, new)) in cert.sections.named().iter().zip(checked.sections.named()) {
        same_set &= old.checks.len() == new.checks.len();
        for (o, n) in old.checks.iter().zip(&new.checks) {
            same_set &= o.name == n.name && o.pass == n.pass;
            if o.measured.is_nan() && n.measured.is_nan() {
                continue;
            }
            let scale = if o.tolerance != 0.0 { o.tolerance.abs() } else { 1.0 };
            drift = drift.max((o.measured - n.measured).abs() / scale);
        }
    }
    rep.push(Check::holds("pass set matches the stored certificate", same_set));
    rep.push(Check::below("max measurement drift / tolerance", drift, tol.reproduction_factor));
    if let Some(q) = &checked.quotient {
        let b = q.model().data().curve()?;
        rep.push(Check::below(
            "stored multipliers reproduce",
            max_diff(&art.multipliers, &multipliers(b)),
            tol.spectrum,
        ));
        rep.push(Check::holds(
            "stored integer T-matrix reproduces",
            art.lattice.as_ref().map(|l| &l.t_matrix) == Some(&q.lattice().companion().rows()),
        ));
        if let (Some(name), Some(dir)) = (&art.b_samples, dir) {
            let rows = read_b_samples(&dir.join(name))?;
            let m = b.channels();
            let mut worst = 0.0f64;
            for row in &rows {
                if row.len() != 1 + 2 * m {
                    return Err(EcsError::Schema(format!("sidecar row of length {}", row.len())));
                }
                for i in 0..m {
                    worst = worst.max((row[1 + i] - b.value(i, row[0])).abs());
                    worst = worst.max((row[1 + m + i] - b.integral(i, row[0])).abs());
                }
            }
            rep.push(Check::below("B sidecar samples reproduce", worst, tol.reintegration));
        }
    }
    let pass = checked.sections.passed() && rep.passed();
    Ok(Verification {
        sections: checked.sections,
        reproduction: rep,
        pass,
    })
}

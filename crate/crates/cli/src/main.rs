use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use ecs_core::certificate::{
    build_manifold, geodesic_sample, reconstruct, save, sweep, verify, BuildConfig, Certificate, Sections,
    SweepSpec, VerificationConfig,
};
use ecs_core::geometry::{sample_points, write_trajectory_csv, ManifoldPoint};
use ecs_core::group::{bundle_nontriviality_evidence, group_axioms_report, isometry_suite, Quotient};
use ecs_core::model::Signature;
use ecs_core::polynomial::{
    compose_for_dimension, cubic_family, isolate_roots, quadratic_family, quartic_family, GlzPolynomial, IntMatrix,
};
use ecs_core::profile::{FourierTerm, PeriodicProfile};
use ecs_core::report::{Comparison, Report};
use ecs_core::spectral::{calibrate, necessity_check, seed_constant, CalibrationOptions};
use ecs_core::EcsError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

#[derive(Parser)]
#[command(name = "ecs", version, about = "Build and verify compact rank-one ECS manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Cubic,
    Quadratic,
    Quartic,
    Composed,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a GL(m,Z) polynomial, its roots and companion matrix.
    GenPoly {
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum, default_value = "composed")]
        family: Family,
        #[arg(long, allow_hyphen_values = true)]
        k: Option<i64>,
        #[arg(long)]
        l: Option<i64>,
        /// Middle coefficient parameter of the quartic family.
        #[arg(long = "mid")]
        mid: Option<i64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Calibrate f, A and B to the roots of a polynomial.
    SolveSpectrum {
        #[arg(long)]
        poly: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        /// Amplitude of the cos(2 pi t/p) perturbation of f.
        #[arg(long, default_value_t = 0.05)]
        amplitude: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the full pipeline and write a certificate.
    Build {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        signature: Signature,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        #[arg(long, env = "ECS_SEED", default_value_t = 0)]
        seed: u64,
        /// Smaller samples in every suite.
        #[arg(long)]
        quick: bool,
        #[arg(short, long, default_value = "certificate.json")]
        output: PathBuf,
    },
    /// Re-run every check of a stored certificate.
    Verify {
        cert: PathBuf,
        /// Print every check, not just failures.
        #[arg(short, long)]
        verbose: bool,
    },
    /// Integrate a random geodesic and write it as CSV.
    Geodesic {
        cert: PathBuf,
        #[arg(long, env = "ECS_SEED", default_value_t = 0)]
        seed: u64,
        /// Half-width of the parameter span, in periods.
        #[arg(long, default_value_t = 100.0)]
        periods: f64,
        /// Output samples on each side of the start point.
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Reduce a point to the fundamental domain.
    Canonicalize {
        cert: PathBuf,
        /// Comma-separated t,s,v1,...,vm.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
    /// Re-certify Fourier perturbations of a certificate's f.
    Sweep {
        /// Base certificate; defaults to the spec's `base`, relative to the spec.
        cert: Option<PathBuf>,
        #[arg(long)]
        spec: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Group axioms and isometry checks on a certificate's model.
    VerifyGroup {
        cert: PathBuf,
        #[arg(long, env = "ECS_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(short, long)]
        verbose: bool,
    },
    /// Canonicalization, freeness, discontinuity and fibre checks.
    VerifyQuotient {
        cert: PathBuf,
        #[arg(long, env = "ECS_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        points: usize,
        #[arg(short, long)]
        verbose: bool,
    },
}

/// A run that completed but whose checks did not all pass.
#[derive(Debug)]
struct ChecksFailed;

impl std::fmt::Display for ChecksFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("checks failed")
    }
}

impl std::error::Error for ChecksFailed {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.is::<ChecksFailed>() {
        return 1;
    }
    let mut core = err.chain().find_map(|e| e.downcast_ref::<EcsError>());
    while let Some(EcsError::Stage { source, .. }) = core {
        core = Some(source);
    }
    match core {
        Some(
            EcsError::ParameterDomain(_)
            | EcsError::Schema(_)
            | EcsError::Io(_)
            | EcsError::ModelMismatch(_)
            | EcsError::SpectrumStructure(_)
            | EcsError::UnitRoot { .. }
            | EcsError::DegenerateSpectrum(_)
            | EcsError::ConstantProfile,
        ) => 2,
        Some(_) => 1,
        // Files that cannot be read or parsed.
        None => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if !err.is::<ChecksFailed>() {
                eprintln!("error: {err:#}");
            }
            ExitCode::from(exit_code(&err))
        }
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => match writeln!(io::stdout().lock(), "{text}") {
            Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
            _ => Ok(()),
        },
    }
}

fn load(path: &Path) -> Result<Certificate> {
    Certificate::load(path).with_context(|| format!("reading {}", path.display()))
}

fn print_report(title: &str, report: &Report, verbose: bool) {
    for c in &report.checks {
        if verbose || !c.pass {
            let op = match c.comparison {
                Comparison::Lt => "<",
                Comparison::Gt => ">",
            };
            let tag = if c.pass { "ok  " } else { "FAIL" };
            println!("{tag} {title}: {} = {:.3e} ({op} {:.1e})", c.name, c.measured, c.tolerance);
        }
    }
    for n in &report.notes {
        if verbose {
            println!("     {title}: {n}");
        }
    }
}

fn print_sections(sections: &Sections, verbose: bool) {
    for (name, r) in sections.named() {
        print_report(name, r, verbose);
        let passed = r.checks.iter().filter(|c| c.pass).count();
        println!("{name}: {passed}/{} checks pass", r.checks.len());
    }
}

fn finish(pass: bool) -> Result<()> {
    if pass {
        Ok(())
    } else {
        Err(ChecksFailed.into())
    }
}

fn parse_point(text: &str, m: usize) -> Result<ManifoldPoint> {
    let values = text
        .split(',')
        .map(|x| x.trim().parse::<f64>().with_context(|| format!("bad coordinate {x:?}")))
        .collect::<Result<Vec<f64>>>()
        .map_err(|e| anyhow!(EcsError::ParameterDomain(format!("{e:#}"))))?;
    if values.len() != m + 2 {
        return Err(EcsError::ParameterDomain(format!("point needs {} coordinates, got {}", m + 2, values.len())).into());
    }
    Ok(ManifoldPoint::new(values[0], values[1], values[2..].to_vec()))
}

fn read_polynomial(path: &Path) -> Result<GlzPolynomial> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(EcsError::from)?;
    let record = value.get("polynomial").cloned().unwrap_or(value);
    Ok(serde_json::from_value(record).map_err(EcsError::from)?)
}

fn gen_poly(m: usize, family: Family, k: Option<i64>, l: Option<i64>, mid: Option<i64>) -> Result<GlzPolynomial> {
    let need = |x: Option<i64>, name: &str| {
        x.ok_or_else(|| EcsError::ParameterDomain(format!("--{name} is required for this family")))
    };
    let p = match family {
        Family::Composed => compose_for_dimension(m)?,
        Family::Cubic => cubic_family(need(k, "k")?, need(l, "l")?)?,
        Family::Quadratic => quadratic_family(need(k, "k")?)?,
        Family::Quartic => quartic_family(need(k, "k")?, need(mid, "mid")?, need(l, "l")?)?.0,
    };
    if p.degree() != m {
        bail!(EcsError::ParameterDomain(format!("family gives degree {}, not m = {m}", p.degree())));
    }
    Ok(p)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::GenPoly {
            m,
            family,
            k,
            l,
            mid,
            output,
        } => {
            let p = gen_poly(m, family, k, l, mid)?;
            let iso = isolate_roots(&p)?;
            let doc = json!({
                "polynomial": p,
                "roots": iso.spectrum.values(),
                "brackets": iso.brackets,
                "companion": IntMatrix::companion(&p).rows(),
            });
            emit(output.as_deref(), &serde_json::to_string_pretty(&doc)?)
        }
        Command::SolveSpectrum {
            poly,
            p,
            amplitude,
            output,
        } => {
            let poly = read_polynomial(&poly)?;
            let target = isolate_roots(&poly)?.spectrum;
            let seed = seed_constant(&target, p)?;
            let f = PeriodicProfile::new(p, seed.h, vec![FourierTerm { k: 1, cos: amplitude, sin: 0.0 }])?;
            let sol = calibrate(&f, &target, &seed, &CalibrationOptions::default())?;
            let necessity = necessity_check(&sol);
            let doc = json!({
                "polynomial": poly,
                "target": target.values(),
                "achieved": sol.achieved.values(),
                "f": sol.f,
                "a": sol.a.entries(),
                "b_initial": sol.b.initial(),
                "residual": sol.residual,
                "necessity": necessity,
            });
            emit(output.as_deref(), &serde_json::to_string_pretty(&doc)?)?;
            finish(necessity.passed())
        }
        Command::Build {
            n,
            signature,
            p,
            theta,
            seed,
            quick,
            output,
        } => {
            let mut cfg = BuildConfig::new(n, signature, p, theta);
            cfg.seed = seed;
            if quick {
                cfg.verification = VerificationConfig::quick();
            }
            let mut built = build_manifold(&cfg)?;
            save(&mut built, &output)?;
            print_sections(&built.certificate.sections, false);
            println!(
                "{}: {}",
                output.display(),
                if built.certificate.pass { "PASS" } else { "FAIL" }
            );
            finish(built.certificate.pass)
        }
        Command::Verify { cert, verbose } => {
            let c = load(&cert)?;
            let v = verify(&c, cert.parent())?;
            print_sections(&v.sections, verbose);
            print_report("reproduction", &v.reproduction, verbose);
            println!("{}: {}", cert.display(), if v.pass { "PASS" } else { "FAIL" });
            finish(v.pass)
        }
        Command::Geodesic {
            cert,
            seed,
            periods,
            samples,
            output,
        } => {
            let c = load(&cert)?;
            let q = reconstruct(&c)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (structured, generic) = geodesic_sample(q.model(), periods, samples, &mut rng)?;
            match &output {
                Some(path) => write_trajectory_csv(&structured, fs::File::create(path)?)?,
                None => write_trajectory_csv(&structured, io::stdout().lock())?,
            }
            let agree = structured.max_relative_diff(&generic);
            let drift = structured.energy_drift().max(generic.energy_drift());
            let tol = &c.tolerances;
            eprintln!("structured vs generic (relative): {agree:.3e}");
            eprintln!("g(gamma', gamma') drift (relative): {drift:.3e}");
            finish(agree < tol.geodesic_agreement && drift < tol.geodesic_drift)
        }
        Command::Canonicalize { cert, point } => {
            let q = reconstruct(&load(&cert)?)?;
            let x = parse_point(&point, q.m())?;
            let (gamma, canon) = q.canonicalize(&x)?;
            let doc = json!({
                "gamma": gamma,
                "point": { "t": canon.t, "s": canon.s, "v": canon.v },
                "lattice_coordinates": q.lattice_coords_at(&canon.v, canon.t)?,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
            Ok(())
        }
        Command::Sweep { cert, spec, output } => {
            let text = fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let s: SweepSpec = serde_json::from_str(&text).map_err(EcsError::from)?;
            let base_path = cert.unwrap_or_else(|| spec.parent().unwrap_or(Path::new(".")).join(&s.base));
            let base = load(&base_path)?;
            let result = sweep(&base, &s)?;
            for c in &result.cells {
                let status = match (&c.error, c.pass) {
                    (Some(e), _) => format!("ERROR {e}"),
                    (None, true) => "PASS".into(),
                    (None, false) => "FAIL".into(),
                };
                println!("direction {} amplitude {}: {status}", c.direction, c.amplitude);
            }
            println!("{}/{} cells pass", result.passing(), result.cells.len());
            if let Some(path) = &output {
                fs::write(path, serde_json::to_string_pretty(&result)?)?;
            }
            finish(result.passing() == result.cells.len())
        }
        Command::VerifyGroup {
            cert,
            seed,
            trials,
            verbose,
        } => {
            let q = reconstruct(&load(&cert)?)?;
            let model = q.model();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut report = group_axioms_report(model, trials, &mut rng)?;
            let pts = sample_points(model.data(), 10, &mut rng);
            report.extend(isometry_suite(model, trials, &pts, &mut rng)?);
            print_report("group", &report, verbose);
            println!("group: {}", if report.passed() { "PASS" } else { "FAIL" });
            finish(report.passed())
        }
        Command::VerifyQuotient {
            cert,
            seed,
            points,
            verbose,
        } => {
            let c = load(&cert)?;
            let q = reconstruct(&c)?;
            let report = quotient_report(&q, points, c.verification.kmax, seed)?;
            print_report("quotient", &report, verbose);
            println!("quotient: {}", if report.passed() { "PASS" } else { "FAIL" });
            finish(report.passed())
        }
    }
}

fn quotient_report(q: &Quotient, points: usize, kmax: u32, seed: u64) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = q.model().data().p;
    let mut report = q.canonicalization_report(points, &mut rng)?;
    report.extend(q.freeness_check(100, &mut rng)?);
    report.extend(q.proper_discontinuity_check(50, &mut rng)?);
    let fibres = (0..10)
        .map(|j| q.torus_fiber_check(p * j as f64 / 10.0, 10, &mut rng))
        .collect::<ecs_core::Result<Vec<_>>>()?;
    report.extend(Report::worst_of(fibres));
    report.extend(bundle_nontriviality_evidence(q.lattice(), kmax));
    Ok(report)
}

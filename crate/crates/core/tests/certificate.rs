use ecs_core::certificate::{
    build_manifold, save, sweep, verify, BuildConfig, Certificate, SweepSpec, VerificationConfig,
};
use ecs_core::profile::{FourierTerm, PeriodicProfile};
use ecs_core::EcsError;

fn config(n: usize, signs: &str) -> BuildConfig {
    BuildConfig::new(n, signs.parse().unwrap(), 1.0, 1.0)
}

fn quick(n: usize, signs: &str) -> BuildConfig {
    let mut cfg = config(n, signs);
    cfg.verification = VerificationConfig::quick();
    cfg
}

fn failures(cert: &Certificate) -> Vec<String> {
    cert.sections
        .failures()
        .into_iter()
        .map(|(s, c)| format!("{s}: {} = {:e} (tol {:e})", c.name, c.measured, c.tolerance))
        .collect()
}

#[test]
fn default_builds_pass_for_two_signatures() {
    for signs in ["+++", "+-+"] {
        let built = build_manifold(&config(5, signs)).unwrap();
        let cert = &built.certificate;
        assert!(cert.pass, "{signs}: {:?}", failures(cert));
        assert_eq!(cert.artifacts.lattice.as_ref().unwrap().t_matrix, vec![
            vec![0, 0, 1],
            vec![1, 0, -6],
            vec![0, 1, 5]
        ]);
        let a = &cert.artifacts.a;
        assert!(a.iter().sum::<f64>().abs() < 1e-13);
        assert!(cert.artifacts.f.is_nonconstant());
    }
}

#[test]
fn pass_flag_is_the_conjunction_of_sections() {
    let cert = build_manifold(&quick(5, "++-")).unwrap().certificate;
    assert_eq!(cert.pass, cert.sections.named().iter().all(|(_, r)| r.passed()));
    for (name, r) in cert.sections.named() {
        assert!(!r.checks.is_empty(), "{name} is empty");
    }
}

#[test]
fn dimension_four_is_rejected() {
    let err = build_manifold(&config(4, "++")).unwrap_err();
    assert!(matches!(err, EcsError::ParameterDomain(_)), "{err}");
}

#[test]
fn signature_length_must_be_n_minus_2() {
    let err = build_manifold(&config(6, "+++")).unwrap_err();
    assert!(matches!(err, EcsError::ParameterDomain(_)), "{err}");
}

#[test]
fn builds_are_deterministic() {
    let a = build_manifold(&quick(5, "+-+")).unwrap().certificate.to_json().unwrap();
    let b = build_manifold(&quick(5, "+-+")).unwrap().certificate.to_json().unwrap();
    assert_eq!(a, b);
}

#[test]
fn json_round_trip_is_byte_identical() {
    let json = build_manifold(&quick(6, "+-++")).unwrap().certificate.to_json().unwrap();
    let again = Certificate::from_json(&json).unwrap().to_json().unwrap();
    assert_eq!(json, again);
}

#[test]
fn schema_version_is_checked() {
    let mut cert = build_manifold(&quick(5, "+++")).unwrap().certificate;
    cert.schema_version = 99;
    let err = Certificate::from_json(&cert.to_json().unwrap()).unwrap_err();
    assert!(matches!(err, EcsError::Schema(_)), "{err}");
}

#[test]
fn saved_certificate_verifies_with_its_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m5.json");
    let mut built = build_manifold(&quick(5, "+++")).unwrap();
    save(&mut built, &path).unwrap();
    assert_eq!(built.certificate.artifacts.b_samples.as_deref(), Some("m5.b.csv"));
    assert!(dir.path().join("m5.b.csv").exists());
    let loaded = Certificate::load(&path).unwrap();
    assert_eq!(loaded, built.certificate);
    let v = verify(&loaded, Some(dir.path())).unwrap();
    assert!(v.pass, "{:?}", v.reproduction.failures().collect::<Vec<_>>());
    assert!(v.reproduction.get("B sidecar samples reproduce").unwrap().pass);
    let drift = v.reproduction.get("max measurement drift / tolerance").unwrap();
    assert!(drift.measured < 10.0);
}

#[test]
fn corrupted_trace_fails_verification() {
    let mut cert = build_manifold(&quick(5, "+++")).unwrap().certificate;
    cert.artifacts.a[0] += 1e-3;
    let v = verify(&cert, None).unwrap();
    assert!(!v.pass);
    let trace = v.sections.spectral.get("|trace A|").unwrap();
    assert!(!trace.pass && (trace.measured - 1e-3).abs() < 1e-12);
}

#[test]
fn constant_f_fails_verification() {
    let mut cert = build_manifold(&quick(5, "+++")).unwrap().certificate;
    cert.artifacts.f.terms.clear();
    let v = verify(&cert, None).unwrap();
    assert!(!v.pass);
    assert!(!v.sections.spectral.get("L2 distance of f from its mean").unwrap().pass);
}

#[test]
fn stored_pass_flag_is_rechecked() {
    let mut cert = build_manifold(&quick(5, "+++")).unwrap().certificate;
    cert.sections.geometry.checks[0].pass = false;
    let v = verify(&cert, None).unwrap();
    assert!(!v.pass);
    assert!(!v.reproduction.get("stored pass flag is the conjunction of its sections").unwrap().pass);
}

fn direction(k: u32, cos: f64, sin: f64) -> PeriodicProfile {
    PeriodicProfile::new(1.0, 0.0, vec![FourierTerm { k, cos, sin }]).unwrap()
}

fn spec(amplitudes: Vec<f64>) -> SweepSpec {
    SweepSpec {
        base: "base.json".into(),
        directions: vec![direction(2, 1.0, 0.0), direction(1, 0.0, 1.0), direction(3, 0.5, 0.5)],
        amplitudes,
        verification: None,
    }
}

#[test]
fn sweep_over_three_directions() {
    let base = build_manifold(&quick(5, "+++")).unwrap().certificate;
    let result = sweep(&base, &spec(vec![0.0, 0.05, 0.1])).unwrap();
    assert_eq!(result.cells.len(), 9);
    assert!(result.passing() >= 7, "{:?}", result.cells.iter().map(|c| (c.pass, &c.error)).collect::<Vec<_>>());
    let base_json = base.to_json().unwrap();
    for cell in result.cells.iter().filter(|c| c.amplitude == 0.0) {
        assert_eq!(cell.certificate.as_ref().unwrap().to_json().unwrap(), base_json);
    }
    // Distinct nonzero perturbations give distinct profiles.
    let d = &result.distances;
    assert_eq!(d.len(), 9);
    for i in 0..9 {
        assert_eq!(d[i][i], Some(0.0));
        for j in 0..9 {
            let (a, b) = (&result.cells[i], &result.cells[j]);
            if i != j && a.amplitude != 0.0 && b.amplitude != 0.0 {
                if let Some(x) = d[i][j] {
                    assert!(x > 1e-3, "{i},{j}: {x}");
                }
            }
        }
    }
}

#[test]
fn sweep_rejects_directions_with_nonzero_mean() {
    let base = build_manifold(&quick(5, "+++")).unwrap().certificate;
    let mut s = spec(vec![0.1]);
    s.directions.push(PeriodicProfile::new(1.0, 0.2, vec![FourierTerm { k: 1, cos: 1.0, sin: 0.0 }]).unwrap());
    let err = sweep(&base, &s).unwrap_err();
    assert!(matches!(err, EcsError::ParameterDomain(_)), "{err}");
}

#[test]
fn sweep_records_failing_cells_and_continues() {
    let base = build_manifold(&quick(5, "+++")).unwrap().certificate;
    // A huge amplitude drives f + aᵢ negative and the calibration out of its basin.
    let result = sweep(&base, &spec(vec![0.05, 50.0])).unwrap();
    assert_eq!(result.cells.len(), 6);
    let big: Vec<_> = result.cells.iter().filter(|c| c.amplitude == 50.0).collect();
    assert!(big.iter().all(|c| !c.pass));
    assert!(big.iter().any(|c| c.error.is_some()));
    assert!(result.cells.iter().filter(|c| c.amplitude == 0.05).all(|c| c.pass));
}

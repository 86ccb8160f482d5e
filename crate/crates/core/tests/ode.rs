use ecs_core::certificate::{build_manifold, BuildConfig, VerificationConfig};
use ecs_core::integrate::Dopri5;
use ecs_core::ode::{check_t_nontrivial, Model, SolutionE, SolutionL};
use ecs_core::polynomial::compose_for_dimension;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn calibrated(n: usize, signs: &str) -> ecs_core::group::Quotient {
    let mut cfg = BuildConfig::new(n, signs.parse().unwrap(), 1.0, 1.0);
    cfg.verification = VerificationConfig::quick();
    build_manifold(&cfg).unwrap().quotient.unwrap()
}

fn random_solution(m: usize, rng: &mut ChaCha8Rng) -> SolutionE {
    SolutionE::new(
        (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
}

/// `ü = (f + A)u` by adaptive DP45, sharing nothing with the Hill flow tables.
fn reference(model: &Model, u: &SolutionE, t: f64) -> Vec<f64> {
    let d = model.data();
    let m = d.m();
    let rhs = |s: f64, y: &[f64], dy: &mut [f64]| {
        for i in 0..m {
            dy[i] = y[m + i];
            dy[m + i] = (d.f.value(s) + d.a.entries()[i]) * y[i];
        }
    };
    let mut y: Vec<f64> = u.pos.iter().chain(&u.vel).copied().collect();
    Dopri5::new(1e-13, 1e-15).integrate(&rhs, 0.0, t, &mut y).unwrap();
    y
}

#[test]
fn evaluation_matches_independent_integration() {
    let q = calibrated(5, "+-+");
    let model = q.model();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for t in [0.37, 1.0, -1.6, 2.9] {
        let u = random_solution(3, &mut rng);
        let (pos, vel) = model.evaluate(&u, t);
        let want = reference(model, &u, t);
        let got: Vec<f64> = pos.into_iter().chain(vel).collect();
        let scale = want.iter().fold(1.0f64, |s, x| s.max(x.abs()));
        let err = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
        assert!(err < 1e-9, "t = {t}: {err:e}");
    }
}

#[test]
fn evaluation_is_linear() {
    let q = calibrated(5, "+++");
    let model = q.model();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (u, w) = (random_solution(3, &mut rng), random_solution(3, &mut rng));
    let (alpha, beta) = (0.7, -1.3);
    let combo = u.scale(alpha).add(&w.scale(beta));
    for t in [0.2, 1.7, -2.4] {
        let (cu, cv) = model.evaluate(&combo, t);
        let (uu, uv) = model.evaluate(&u, t);
        let (wu, wv) = model.evaluate(&w, t);
        for i in 0..3 {
            assert!((cu[i] - (alpha * uu[i] + beta * wu[i])).abs() < 1e-12 * cu[i].abs().max(1.0));
            assert!((cv[i] - (alpha * uv[i] + beta * wv[i])).abs() < 1e-12 * cv[i].abs().max(1.0));
        }
    }
}

#[test]
fn omega_is_constant_on_random_pairs() {
    let q = calibrated(5, "+-+");
    let model = q.model();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let times: Vec<f64> = (0..10).map(|j| 3.0 * j as f64 / 9.0).collect();
    let mut spread = 0.0f64;
    for _ in 0..100 {
        let (u, w) = (random_solution(3, &mut rng), random_solution(3, &mut rng));
        let vals: Vec<f64> = times.iter().map(|&t| model.omega_at(&u, &w, t)).collect();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        spread = spread.max(hi - lo);
    }
    assert!(spread < 1e-9, "{spread:e}");
}

#[test]
fn omega_on_the_standard_symplectic_pair() {
    let q = calibrated(5, "+-+");
    let model = q.model();
    for i in 0..3 {
        let mut e = vec![0.0; 3];
        e[i] = 1.0;
        let u = SolutionE::new(e.clone(), vec![0.0; 3]);
        let w = SolutionE::new(vec![0.0; 3], e);
        let eps = model.data().signature.sign(i);
        assert!((model.omega(&u, &w) + eps).abs() < 1e-15);
        assert_eq!(model.omega(&u, &u), 0.0);
    }
}

#[test]
fn omega_vanishes_on_the_first_order_space() {
    let q = calibrated(6, "+--+");
    let model = q.model();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let l = |rng: &mut ChaCha8Rng| SolutionL { pos: (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        let (a, b) = (model.embed_l(&l(&mut rng)).unwrap(), model.embed_l(&l(&mut rng)).unwrap());
        assert!(model.omega(&a, &b).abs() < 1e-12);
    }
}

#[test]
fn first_order_solutions_solve_the_second_order_equation() {
    let q = calibrated(5, "+++");
    let model = q.model();
    let mut worst = 0.0f64;
    for y in q.lattice().generators() {
        let e = model.embed_l(&y).unwrap();
        for j in 0..=20 {
            let t = 2.0 * j as f64 / 20.0;
            let (lp, lv) = model.evaluate_l(&y, t).unwrap();
            let (ep, ev) = model.evaluate(&e, t);
            for i in 0..3 {
                worst = worst.max((lp[i] - ep[i]).abs() / lp[i].abs().max(1.0));
                worst = worst.max((lv[i] - ev[i]).abs() / lv[i].abs().max(1.0));
            }
        }
    }
    assert!(worst < 1e-9, "{worst:e}");
}

#[test]
fn translation_on_the_first_order_space_is_diagonal() {
    let q = calibrated(5, "+-+");
    let model = q.model();
    let lambda = model.l_multipliers().unwrap();
    for i in 0..3 {
        let mut pos = vec![0.0; 3];
        pos[i] = 1.0;
        let u = model.embed_l(&SolutionL { pos }).unwrap();
        let tu = model.translate(&u);
        for j in 0..3 {
            let want = if i == j { lambda[i] } else { 0.0 };
            assert!((tu.pos[j] - want).abs() < 1e-10, "{i},{j}: {}", tu.pos[j]);
        }
    }
    let mut sorted = lambda.clone();
    sorted.sort_by(f64::total_cmp);
    let roots = q.lattice().multipliers();
    for (a, b) in sorted.iter().zip(roots) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn translation_round_trips() {
    let q = calibrated(5, "++-");
    let model = q.model();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let u = random_solution(3, &mut rng);
    let back = model.translate_pow(&model.translate_pow(&u, -1), 1);
    assert!(back.max_abs_diff(&u) < 1e-10);
    // (Tu)(t) = u(t − p)
    let tu = model.translate(&u);
    let (a, _) = model.evaluate(&tu, 0.4);
    let (b, _) = model.evaluate(&u, 0.4 - 1.0);
    for i in 0..3 {
        assert!((a[i] - b[i]).abs() < 1e-10);
    }
}

#[test]
fn monodromy_blocks_are_unimodular() {
    for (n, signs) in [(5, "+-+"), (6, "++-+"), (7, "+-+-+")] {
        let q = calibrated(n, signs);
        let mono = q.model().monodromy().unwrap();
        assert!(mono.max_det_drift() < 1e-10, "{n}: {:e}", mono.max_det_drift());
    }
}

#[test]
fn lattice_is_integral_with_the_source_characteristic_polynomial() {
    for (n, signs) in [(5, "+++"), (6, "+-++")] {
        let q = calibrated(n, signs);
        let lat = q.lattice();
        assert!(lat.char_poly_error() < 1e-7);
        assert!(lat.t_matrix_error() < 1e-7);
        assert_eq!(lat.polynomial(), &compose_for_dimension(n - 2).unwrap());
        assert!(check_t_nontrivial(lat, 20).checks.iter().all(|c| c.pass));
    }
}

use ecs_core::certificate::{build_manifold, BuildConfig, VerificationConfig};
use ecs_core::geometry::{sample_points, ManifoldPoint};
use ecs_core::group::{
    act_on_m, bundle_nontriviality_evidence, commutator, group_axioms_report, group_op, inverse,
    isometry_check, isometry_suite, relative_diff, GammaElement, GroupElement, Quotient,
};
use ecs_core::ode::{check_matrix_nontrivial, lattice_from_multipliers, SolutionE};
use ecs_core::polynomial::{quadratic_family, GlzPolynomial, IntMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn quotient(n: usize, signs: &str) -> Quotient {
    let mut cfg = BuildConfig::new(n, signs.parse().unwrap(), 1.0, 1.0);
    cfg.verification = VerificationConfig::quick();
    build_manifold(&cfg).unwrap().quotient.unwrap()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn integer_translations_compose() {
    let q = quotient(5, "+++");
    let model = q.model();
    for (k, l) in [(1, 2), (-3, 5), (0, -1)] {
        let prod = group_op(model, &GroupElement::translation(k, 3), &GroupElement::translation(l, 3)).unwrap();
        assert_eq!(prod, GroupElement::translation(k + l, 3));
    }
    let g = GroupElement::random(3, &mut rng(1));
    assert_eq!(group_op(model, &GroupElement::identity(3), &g).unwrap(), g);
}

#[test]
fn axioms_hold_on_calibrated_models() {
    for (n, signs) in [(5, "+-+"), (6, "-++-")] {
        let q = quotient(n, signs);
        let r = group_axioms_report(q.model(), 100, &mut rng(2)).unwrap();
        assert!(r.passed(), "{n}: {:?}", r.failures().collect::<Vec<_>>());
    }
}

#[test]
fn inverse_is_two_sided() {
    let q = quotient(5, "+++");
    let model = q.model();
    let mut r = rng(3);
    for _ in 0..100 {
        let g = GroupElement::random(3, &mut r);
        let e = GroupElement::identity(3).components();
        let gi = inverse(model, &g).unwrap();
        assert!(relative_diff(&e, &group_op(model, &g, &gi).unwrap().components()) < 1e-9);
        assert!(relative_diff(&e, &group_op(model, &gi, &g).unwrap().components()) < 1e-9);
    }
}

#[test]
fn special_elements_are_exact_isometries() {
    let q = quotient(5, "+-+");
    let model = q.model();
    let pts = sample_points(model.data(), 10, &mut rng(4));
    for g in [GroupElement::translation(2, 3), GroupElement::new(0, 0.8, SolutionE::zero(3))] {
        let r = isometry_check(model, &g, &pts).unwrap();
        assert!(r.get("metric pullback (analytic differential)").unwrap().measured < 1e-12, "{g:?}");
    }
}

#[test]
fn random_elements_are_isometries() {
    let q = quotient(5, "+-+");
    let model = q.model();
    let pts = sample_points(model.data(), 10, &mut rng(5));
    let r = isometry_suite(model, 100, &pts, &mut rng(6)).unwrap();
    assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
    assert!(r.get("metric pullback (analytic differential)").unwrap().measured < 1e-8);
}

#[test]
fn isometry_check_needs_ten_points() {
    let q = quotient(5, "+++");
    let pts = sample_points(q.model().data(), 9, &mut rng(7));
    assert!(isometry_check(q.model(), &GroupElement::identity(3), &pts).is_err());
}

#[test]
fn gamma_action_specializes_the_group_action() {
    let q = quotient(5, "+++");
    let mut r = rng(8);
    let x = ManifoldPoint::new(0.4, -1.2, vec![0.3, 0.9, -0.5]);
    for _ in 0..20 {
        let g = GammaElement::random(3, 2, &mut r);
        let a = q.gamma_act(&g, &x).unwrap();
        let b = act_on_m(q.model(), &q.to_group_element(&g).unwrap(), &x).unwrap();
        assert!(relative_diff(&a.to_chart(), &b.to_chart()) < 1e-10, "{g:?}");
    }
}

#[test]
fn gamma_composition_matches_the_action() {
    let q = quotient(5, "+-+");
    let mut r = rng(9);
    let x = ManifoldPoint::new(0.7, 0.2, vec![-0.4, 0.1, 0.8]);
    for _ in 0..20 {
        let a = GammaElement::random(3, 2, &mut r);
        let b = GammaElement::random(3, 2, &mut r);
        let two_step = q.gamma_act(&a, &q.gamma_act(&b, &x).unwrap()).unwrap();
        let once = q.gamma_act(&q.compose(&a, &b).unwrap(), &x).unwrap();
        assert!(relative_diff(&two_step.to_chart(), &once.to_chart()) < 1e-9);
        let back = q.compose(&a, &q.gamma_inverse(&a).unwrap()).unwrap();
        assert!(back.is_identity());
    }
}

#[test]
fn canonicalize_examples() {
    let q = quotient(5, "+++");
    let (g, same) = q.canonicalize(&ManifoldPoint::new(0.0, 0.0, vec![0.0; 3])).unwrap();
    assert!(g.is_identity());
    assert_eq!(same, ManifoldPoint::new(0.0, 0.0, vec![0.0; 3]));

    let inside = ManifoldPoint::new(0.3, 0.5, vec![0.0; 3]);
    let (g, c) = q.canonicalize(&inside).unwrap();
    assert!(g.is_identity() && c == inside);

    let (g, c) = q.canonicalize(&ManifoldPoint::new(1.3, 0.5, vec![0.0; 3])).unwrap();
    assert_eq!(g, GammaElement::new(-1, 0, vec![0; 3]));
    assert!((c.t - 0.3).abs() < 1e-15);

    let (g, c) = q.canonicalize(&ManifoldPoint::new(0.3, 2.25, vec![0.0; 3])).unwrap();
    assert_eq!((g.k, g.l), (0, -2));
    assert!((c.s - 0.25).abs() < 1e-15);
}

#[test]
fn canonical_points_are_unique_per_orbit() {
    let q = quotient(5, "+-+");
    let r = q.canonicalization_report(1000, &mut rng(10)).unwrap();
    assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
}

#[test]
fn canonical_lattice_coordinates_are_in_the_unit_cube() {
    let q = quotient(6, "++-+");
    let mut r = rng(11);
    for _ in 0..200 {
        let x = ManifoldPoint::new(
            r.gen_range(-5.0..5.0),
            r.gen_range(-9.0..9.0),
            (0..4).map(|_| r.gen_range(-3.0..3.0)).collect(),
        );
        let (_, c) = q.canonicalize(&x).unwrap();
        assert!(q.in_domain(&c).unwrap());
        for z in q.lattice_coords_at(&c.v, c.t).unwrap() {
            assert!((-1e-12..1.0).contains(&z), "{z}");
        }
    }
}

#[test]
fn action_is_free_and_properly_discontinuous() {
    let q = quotient(5, "+++");
    let mut r = rng(12);
    let free = q.freeness_check(100, &mut r).unwrap();
    assert!(free.passed(), "{:?}", free.failures().collect::<Vec<_>>());
    let disc = q.proper_discontinuity_check(20, &mut r).unwrap();
    assert!(disc.passed(), "{:?}", disc.failures().collect::<Vec<_>>());
    assert!(disc.get("separation over word length <= 3").unwrap().measured > 0.01);
}

#[test]
fn word_ball_has_no_repeats() {
    let q = quotient(5, "+++");
    let w = q.words(2).unwrap();
    let mut sorted = w.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), w.len());
    assert!(w.iter().all(|g| !g.is_identity()));
    // Ten generators, and their pairwise products minus cancellations.
    assert!(w.len() > 10);
}

#[test]
fn torus_fibres_are_abelian() {
    let q = quotient(5, "+-+");
    let mut r = rng(13);
    for j in 0..10 {
        let rep = q.torus_fiber_check(j as f64 / 10.0, 10, &mut r).unwrap();
        assert!(rep.passed(), "{j}: {:?}", rep.failures().collect::<Vec<_>>());
    }
}

#[test]
fn second_order_pairs_do_not_commute() {
    // Negative control: outside 𝓛 the symplectic form no longer vanishes.
    let q = quotient(5, "+-+");
    let model = q.model();
    let mut r = rng(14);
    let mut largest = 0.0f64;
    for _ in 0..10 {
        let a = GroupElement::new(0, 0.0, GroupElement::random(3, &mut r).u);
        let b = GroupElement::new(0, 0.0, GroupElement::random(3, &mut r).u);
        let c = commutator(model, &a, &b).unwrap();
        assert!((c.q + 2.0 * model.omega(&a.u, &b.u)).abs() < 1e-9);
        largest = largest.max(c.q.abs());
    }
    assert!(largest > 1e-2, "{largest}");
}

#[test]
fn bundle_evidence() {
    let q = quotient(5, "+++");
    assert!(bundle_nontriviality_evidence(q.lattice(), 20).passed());

    let golden = quadratic_family(-3).unwrap();
    let roots = [(3.0 - 5f64.sqrt()) / 2.0, (3.0 + 5f64.sqrt()) / 2.0];
    let lat = lattice_from_multipliers(&roots, &golden).unwrap();
    assert!(bundle_nontriviality_evidence(&lat, 10).passed());

    let id = IntMatrix::identity(2);
    assert!(!check_matrix_nontrivial(&id, None, 10).passed());
    assert_eq!(golden, GlzPolynomial::new(vec![1, -3, 1]).unwrap());
}

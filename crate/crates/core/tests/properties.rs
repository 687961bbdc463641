use std::sync::Arc;

use popp_core::catalog;
use popp_core::distortion::{analyze_pair, h2_from_eigenvalues, step2_refined_bounds};
use popp_core::exactalg::{gen_eigenvalues, poly_parse, rat, ratio, rel_diff, ExactMatrix, Polynomial, Rational};
use popp_core::maps::{check_theorem_relations, qr_constants};
use popp_core::popp::{verify_frame_law, LocalStructure};
use popp_core::random::{random_frame_change, random_spd};
use popp_core::srmanifold::{check_equiregular, compute_flag, lie_bracket, BracketWord, VectorField};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const N: usize = 3;

fn poly_strategy() -> impl Strategy<Value = Polynomial> {
    let term = (0u32..3, 0u32..3, 0u32..2, -3i64..=3).prop_map(|(a, b, c, k)| (vec![a, b, c], rat(k)));
    prop::collection::vec(term, 0..4).prop_map(|t| Polynomial::from_terms(N, t))
}

fn field_strategy() -> impl Strategy<Value = VectorField> {
    prop::collection::vec(poly_strategy(), N).prop_map(|c| VectorField::new(c, BracketWord::Label("v".into())))
}

fn point_strategy() -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec((-4i64..=4, 1i64..=3).prop_map(|(p, q)| ratio(p, q)), N)
}

fn spd_strategy(k: usize) -> impl Strategy<Value = ExactMatrix> {
    any::<u64>().prop_map(move |seed| random_spd(&mut ChaCha8Rng::seed_from_u64(seed), k))
}

fn sum3(a: &VectorField, b: &VectorField, c: &VectorField) -> VectorField {
    a.add(b).add(c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jacobi_identity(x in field_strategy(), y in field_strategy(), z in field_strategy()) {
        let a = lie_bracket(&x, &lie_bracket(&y, &z));
        let b = lie_bracket(&y, &lie_bracket(&z, &x));
        let c = lie_bracket(&z, &lie_bracket(&x, &y));
        prop_assert!(sum3(&a, &b, &c).is_zero());
    }

    #[test]
    fn bracket_bilinear_and_antisymmetric(x in field_strategy(), y in field_strategy(), z in field_strategy(), c in -5i64..=5) {
        let c = rat(c);
        let lhs = lie_bracket(&x.scale(&c).add(&y), &z);
        let rhs = lie_bracket(&x, &z).scale(&c).add(&lie_bracket(&y, &z));
        prop_assert_eq!(lhs.components(), rhs.components());
        let anti = lie_bracket(&x, &y).add(&lie_bracket(&y, &x));
        prop_assert!(anti.is_zero());
    }

    #[test]
    fn bracket_is_commutator_of_derivations(x in field_strategy(), y in field_strategy(), f in poly_strategy()) {
        let lhs = lie_bracket(&x, &y).apply(&f);
        let rhs = &x.apply(&y.apply(&f)) - &y.apply(&x.apply(&f));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn polynomial_ring_and_parse_round_trip(p in poly_strategy(), q in poly_strategy(), pt in point_strategy()) {
        prop_assert_eq!((&p * &q).eval(&pt), p.eval(&pt) * q.eval(&pt));
        prop_assert_eq!((&p + &q).eval(&pt), p.eval(&pt) + q.eval(&pt));
        let names: Vec<String> = vec!["x".into(), "y".into(), "t".into()];
        let text = p.display_with(&names).to_string();
        prop_assert_eq!(poly_parse(&text, &names).unwrap(), p);
    }

    #[test]
    fn leibniz_rule(p in poly_strategy(), q in poly_strategy(), i in 0usize..N) {
        let lhs = (&p * &q).partial(i);
        let rhs = &(&p.partial(i) * &q) + &(&p * &q.partial(i));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn heisenberg_flag_is_point_independent(pt in point_strategy()) {
        let h = catalog::heisenberg(1);
        let f = compute_flag(&h, &pt).unwrap();
        prop_assert_eq!(f.ranks, vec![2, 3]);
        prop_assert_eq!(f.homogeneous_dim, 4);
        prop_assert!(compute_flag(&h, &pt).unwrap().invariants_hold());
    }

    #[test]
    fn reciprocal_eigenvalues(g in spd_strategy(4), h in spd_strategy(4)) {
        let a = gen_eigenvalues(&g.to_float(), &h.to_float()).unwrap();
        let b = gen_eigenvalues(&h.to_float(), &g.to_float()).unwrap();
        for (x, y) in a.iter().zip(b.iter().rev()) {
            prop_assert!(rel_diff(*x, 1.0 / y) < 1e-9);
        }
    }

    #[test]
    fn conformality_detection(g in spd_strategy(3), h in spd_strategy(3), c in 1i64..=9) {
        let lambda = gen_eigenvalues(&g.to_float(), &g.scale(&rat(c)).to_float()).unwrap();
        prop_assert!((h2_from_eigenvalues(&lambda) - 1.0).abs() < 1e-9);
        let lambda = gen_eigenvalues(&g.to_float(), &h.to_float()).unwrap();
        let ratio = lambda[2] / lambda[0];
        let h2 = h2_from_eigenvalues(&lambda);
        prop_assert_eq!((h2 - 1.0).abs() < 1e-9, (ratio - 1.0).abs() < 1e-9);
    }
}

fn pair_report(local: &LocalStructure, g: &ExactMatrix, h: &ExactMatrix) -> popp_core::DistortionReport {
    analyze_pair(&local.extension(g).unwrap(), &local.extension(h).unwrap(), 1e-9).unwrap()
}

#[test]
fn eigenvalue_sandwich_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for spec in [catalog::heisenberg(1), catalog::heisenberg(2), catalog::engel()] {
        let local = LocalStructure::at(&spec, &spec.sample_points()[1]).unwrap();
        for _ in 0..100 {
            let g = random_spd(&mut rng, spec.rank());
            let h = random_spd(&mut rng, spec.rank());
            let r = pair_report(&local, &g, &h);
            assert!(r.bounds.all_passed(), "{}: {:?}", spec.name(), r.bounds.failures().collect::<Vec<_>>());
            let prod: f64 = r.mu.iter().product();
            assert!(rel_diff(prod, r.det_full) < 1e-9);
        }
    }
}

#[test]
fn step2_refinement_and_h1_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let h2 = catalog::heisenberg(2);
    let local = LocalStructure::at(&h2, &h2.sample_points()[2]).unwrap();
    for _ in 0..50 {
        let r = pair_report(&local, &random_spd(&mut rng, 4), &random_spd(&mut rng, 4));
        assert!(step2_refined_bounds(&r, 1e-9).unwrap().all_passed());
    }
    let h1 = catalog::heisenberg(1);
    let local = LocalStructure::at(&h1, &h1.sample_points()[3]).unwrap();
    for _ in 0..50 {
        let r = pair_report(&local, &random_spd(&mut rng, 2), &random_spd(&mut rng, 2));
        let l12 = r.lambda[0] * r.lambda[1];
        assert!(rel_diff(r.mu_by_layer[1][0], l12) < 1e-9);
        assert!(rel_diff(r.det_full, l12 * l12) < 1e-9);
    }
}

#[test]
fn frame_invariance_of_distortion() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for spec in [catalog::heisenberg(1), catalog::heisenberg(2), catalog::engel()] {
        for i in 0..20 {
            let p = &spec.sample_points()[i % spec.sample_points().len()];
            let base = LocalStructure::at(&spec, p).unwrap();
            let a = base.with_frame(base.frame.transformed(&spec, &random_frame_change(&mut rng, &base.frame)).unwrap());
            let b = base.with_frame(base.frame.transformed(&spec, &random_frame_change(&mut rng, &base.frame)).unwrap());
            let g = random_spd(&mut rng, spec.rank());
            let h = random_spd(&mut rng, spec.rank());
            let ra = pair_report(&a, &g, &h);
            let rb = pair_report(&b, &g, &h);
            for (x, y) in ra.mu.iter().zip(&rb.mu) {
                assert!(rel_diff(*x, *y) < 1e-8);
            }
            assert!(rel_diff(ra.h2, rb.h2) < 1e-8 && rel_diff(ra.k2, rb.k2) < 1e-8 && rel_diff(ra.det_full, rb.det_full) < 1e-8);
            let law = verify_frame_law(&spec, &g, &a.frame, &b.frame, 1e-9).unwrap();
            assert!(law.holds, "{}: {law:?}", spec.name());
        }
    }
}

#[test]
fn scaling_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for spec in [catalog::heisenberg(1), catalog::engel()] {
        let local = LocalStructure::at(&spec, &spec.sample_points()[4]).unwrap();
        let g = random_spd(&mut rng, spec.rank());
        let h = random_spd(&mut rng, spec.rank());
        let c: f64 = 3.0;
        let r = pair_report(&local, &g, &h);
        let rc = pair_report(&local, &g, &h.scale(&rat(3)));
        for (s, (l, lc)) in r.mu_by_layer.iter().zip(&rc.mu_by_layer).enumerate() {
            for (x, y) in l.iter().zip(lc) {
                assert!(rel_diff(x * c.powi(s as i32 + 1), *y) < 1e-9);
            }
        }
        assert!(rel_diff(r.det_full * c.powi(r.homogeneous_dim as i32), rc.det_full) < 1e-9);
        assert!(rel_diff(r.k2, rc.k2) < 1e-9 && rel_diff(r.h2, rc.h2) < 1e-9);
    }
}

#[test]
fn swapped_pair_symmetry() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let spec = catalog::engel();
    let local = LocalStructure::at(&spec, &spec.sample_points()[2]).unwrap();
    for _ in 0..20 {
        let g = random_spd(&mut rng, 2);
        let h = random_spd(&mut rng, 2);
        let gh = pair_report(&local, &g, &h);
        let hg = pair_report(&local, &h, &g);
        let q = gh.homogeneous_dim as i32;
        assert!(rel_diff(gh.k2 * gh.det_full, gh.lambda_max().powi(q)) < 1e-9);
        assert!(rel_diff(hg.k2, (1.0 / gh.lambda_min()).powi(q) * gh.det_full) < 1e-9);
        for (x, y) in gh.lambda.iter().zip(hg.lambda.iter().rev()) {
            assert!(rel_diff(*x, 1.0 / y) < 1e-9);
        }
    }
}

#[test]
fn random_diagonal_automorphisms_of_h2() {
    let h2 = Arc::new(catalog::heisenberg(2));
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    use rand::Rng;
    for _ in 0..10 {
        let a: Vec<Rational> =
            (0..2).map(|_| ratio(rng.gen_range(1..=5) * if rng.gen_bool(0.5) { 1 } else { -1 }, rng.gen_range(1..=3))).collect();
        let c = ratio(rng.gen_range(1..=5), rng.gen_range(1..=3));
        let f = catalog::heisenberg_diagonal(&h2, &a, &c);
        let reports: Vec<_> = h2.sample_points().iter().map(|p| qr_constants(&f, p, 1e-9).unwrap()).collect();
        let rel = check_theorem_relations(&reports, 6, 4, 1e-9).unwrap();
        assert!(rel.checks.all_passed(), "{rel:?}");
    }
}

#[test]
fn equiregular_catalog() {
    for spec in [catalog::heisenberg(1), catalog::heisenberg(3), catalog::engel(), catalog::euclidean(3)] {
        assert!(check_equiregular(&spec).unwrap().equiregular, "{}", spec.name());
    }
    assert!(!check_equiregular(&catalog::grushin()).unwrap().equiregular);
}

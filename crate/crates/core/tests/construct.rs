use std::f64::consts::PI;

use approx::assert_relative_eq;
use chebquad::bounds::{certificate, kane_sup, KaneOptions};
use chebquad::construct::{
    brute_force_min_n, equipartition_init, kane_construct, kane_construct_with, moment_map, solve_quadrature,
    transfer_nodes, verify, ConstructError, FaithfulOptions, MomentMap, Quadrature,
};
use chebquad::weight::{CumulativeMass, Domain, WeightSpec};
use proptest::prelude::*;

fn abs_sin() -> WeightSpec {
    WeightSpec::constant(Domain::Interval).lift_to_circle().unwrap()
}

fn sin_squared() -> WeightSpec {
    WeightSpec::jacobi(0.5, 0.5).unwrap().lift_to_circle().unwrap()
}

fn circle_weights() -> Vec<(&'static str, WeightSpec)> {
    vec![
        ("constant", WeightSpec::constant(Domain::Circle)),
        ("abs_sin", abs_sin()),
        ("sin_squared", sin_squared()),
    ]
}

fn equispaced(n: usize) -> Vec<f64> {
    (0..n).map(|j| -PI + 2.0 * PI * j as f64 / n as f64).collect()
}

fn chebyshev_points(n: usize) -> Vec<f64> {
    (1..=n).map(|j| ((2 * j - 1) as f64 * PI / (2 * n) as f64).cos()).collect()
}

fn node_bound(w: &WeightSpec, n: usize) -> usize {
    kane_sup(w, n, &KaneOptions::default()).unwrap().node_bound as usize
}

#[test]
fn equispaced_nodes_are_exact_for_the_constant_weight() {
    let w = WeightSpec::constant(Domain::Circle);
    for n in [2, 5, 17, 64] {
        let q = Quadrature::with_mass(Domain::Circle, n - 1, equispaced(n), 2.0 * PI).unwrap();
        let rep = verify(&q, &w, 1e-10).unwrap();
        assert!(rep.accepted, "N = {n}: {:e}", rep.max_residual);
        assert_eq!(rep.residuals.len(), 2 * (n - 1) + 1);
    }
}

#[test]
fn equispaced_nodes_fail_one_degree_higher() {
    let w = WeightSpec::constant(Domain::Circle);
    let q = Quadrature::with_mass(Domain::Circle, 6, equispaced(6), 2.0 * PI).unwrap();
    assert!(!verify(&q, &w, 1e-6).unwrap().accepted);
}

#[test]
fn chebyshev_points_are_exact_for_the_arcsine_weight() {
    let w = WeightSpec::jacobi(-0.5, -0.5).unwrap();
    for n in [2, 7, 32] {
        let q = Quadrature::new(Domain::Interval, 2 * n - 1, chebyshev_points(n), PI / n as f64).unwrap();
        let rep = verify(&q, &w, 1e-8).unwrap();
        assert!(rep.accepted, "N = {n}: {:e}", rep.max_residual);
    }
}

#[test]
fn perturbed_node_is_rejected() {
    let w = WeightSpec::constant(Domain::Circle);
    let mut x = equispaced(8);
    x[3] += 1e-3;
    let q = Quadrature::with_mass(Domain::Circle, 7, x, 2.0 * PI).unwrap();
    let rep = verify(&q, &w, 1e-9).unwrap();
    assert!(!rep.accepted && rep.max_residual > 1e-5);
}

#[test]
fn verify_rejects_mismatched_domains() {
    let q = Quadrature::new(Domain::Interval, 1, vec![0.0], 2.0).unwrap();
    let err = verify(&q, &WeightSpec::constant(Domain::Circle), 1e-9).unwrap_err();
    assert!(matches!(err, ConstructError::DomainMismatch { .. }));
}

#[test]
fn quadrature_normalizes_nodes() {
    let q = Quadrature::new(Domain::Circle, 1, vec![3.0 * PI / 2.0, 0.5, PI], 1.0).unwrap();
    assert_eq!(q.node_count(), 3);
    assert_relative_eq!(q.nodes()[0], -PI, epsilon = 1e-15);
    assert_relative_eq!(q.nodes()[1], -PI / 2.0, epsilon = 1e-15);
    assert_relative_eq!(q.nodes()[2], 0.5, epsilon = 1e-15);
    assert!(Quadrature::new(Domain::Interval, 1, vec![1.5], 1.0).is_err());
    assert!(Quadrature::new(Domain::Circle, 1, vec![], 1.0).is_err());
    assert!(Quadrature::new(Domain::Circle, 1, vec![0.0], -1.0).is_err());
    assert!(Quadrature::new(Domain::Circle, 1, vec![f64::NAN], 1.0).is_err());
}

#[test]
fn json_round_trip() {
    let q = Quadrature::with_mass(Domain::Circle, 3, equispaced(4), 2.0 * PI).unwrap();
    let text = q.to_json();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["domain", "degree", "nodes", "weight"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(Quadrature::from_json(&text).unwrap(), q);
    assert!(matches!(Quadrature::from_json("{\"domain\": \"Circle\"}"), Err(ConstructError::Parse(_))));
    let bad = r#"{"domain":"Interval","degree":1,"nodes":[2.0],"weight":1.0}"#;
    assert!(Quadrature::from_json(bad).is_err());
}

#[test]
fn moment_map_of_constant_weight() {
    let w = WeightSpec::constant(Domain::Circle);
    let x = 0.7;
    let e = moment_map(&w, 3, x).unwrap();
    assert_eq!(e.entries.len(), 6);
    for k in 1..=3 {
        let kf = k as f64;
        assert_relative_eq!(e.entries[2 * k - 2], 2.0 * PI * (kf * x).cos(), epsilon = 1e-12);
        assert_relative_eq!(e.entries[2 * k - 1], 2.0 * PI * (kf * x).sin(), epsilon = 1e-12);
    }
}

#[test]
fn moment_sum_vanishes_at_equispaced_nodes() {
    let w = WeightSpec::constant(Domain::Circle);
    let mm = MomentMap::new(&w, 5).unwrap();
    let mut sum = vec![0.0; mm.dim()];
    for t in equispaced(6) {
        for (s, e) in sum.iter_mut().zip(mm.at(t).entries) {
            *s += e;
        }
    }
    assert!(sum.iter().all(|v| v.abs() < 1e-12), "{sum:?}");
}

#[test]
fn moment_map_of_sin_squared_at_zero() {
    // ∫ sin²θ = π, ∫ cos 2θ sin²θ = -π/2, all other first-three moments vanish
    let e = moment_map(&sin_squared(), 3, 0.0).unwrap();
    let expect = [PI, 0.0, 1.5 * PI, 0.0, PI, 0.0];
    for (a, b) in e.entries.iter().zip(expect) {
        assert_relative_eq!(*a, b, epsilon = 1e-11);
    }
}

#[test]
fn moment_map_rejects_degree_zero_and_interval_weights() {
    assert!(moment_map(&WeightSpec::constant(Domain::Circle), 0, 0.0).is_err());
    assert!(moment_map(&WeightSpec::constant(Domain::Interval), 1, 0.0).is_err());
}

#[test]
fn equipartition_of_constant_weight() {
    let x = equipartition_init(&WeightSpec::constant(Domain::Circle), 4).unwrap();
    for (a, b) in x.iter().zip([-0.75 * PI, -0.25 * PI, 0.25 * PI, 0.75 * PI]) {
        assert_relative_eq!(*a, b, epsilon = 1e-10);
    }
}

#[test]
fn equipartition_of_abs_sin() {
    let w = abs_sin();
    let x = equipartition_init(&w, 2).unwrap();
    assert_relative_eq!(x[0], -PI / 2.0, epsilon = 1e-9);
    assert_relative_eq!(x[1], PI / 2.0, epsilon = 1e-9);
    // each node sits at the mass median of its arc
    let cdf = CumulativeMass::new(&w, 256).unwrap();
    let x = equipartition_init(&w, 5).unwrap();
    for (k, t) in x.iter().enumerate() {
        assert_relative_eq!(cdf.at(*t).unwrap(), (k as f64 + 0.5) * 4.0 / 5.0, epsilon = 1e-9);
    }
}

#[test]
fn equipartition_of_one_node_is_the_median() {
    let x = equipartition_init(&WeightSpec::constant(Domain::Circle), 1).unwrap();
    assert_eq!(x.len(), 1);
    assert!(x[0].abs() < 1e-10);
    assert!(equipartition_init(&WeightSpec::constant(Domain::Circle), 0).is_err());
}

#[test]
fn solve_constant_weight_degree_seven() {
    let w = WeightSpec::constant(Domain::Circle);
    let q = solve_quadrature(&w, 7, 8, None).unwrap();
    assert!(verify(&q, &w, 1e-10).unwrap().accepted);
    // the solution is a rotation of equispaced nodes
    let gaps: Vec<f64> = q.nodes().windows(2).map(|p| p[1] - p[0]).collect();
    assert!(gaps.iter().all(|g| (g - PI / 4.0).abs() < 1e-6), "{gaps:?}");
}

#[test]
fn solve_chebyshev_lift_matches_constant_weight() {
    let w = WeightSpec::jacobi(-0.5, -0.5).unwrap().lift_to_circle().unwrap();
    let q = solve_quadrature(&w, 7, 8, None).unwrap();
    assert!(verify(&q, &w, 1e-10).unwrap().accepted);
    assert!(verify(&q, &WeightSpec::constant(Domain::Circle), 1e-10).unwrap().accepted);
}

#[test]
fn solve_sin_squared_at_the_node_bound() {
    let w = sin_squared();
    let big_n = node_bound(&w, 4);
    let q = solve_quadrature(&w, 4, big_n, None).unwrap();
    assert_eq!(q.node_count(), big_n);
    assert!(verify(&q, &w, 1e-9).unwrap().accepted);
}

#[test]
fn solve_constant_weight_for_every_degree_up_to_32() {
    let w = WeightSpec::constant(Domain::Circle);
    for n in 1..=32 {
        let q = solve_quadrature(&w, n, n + 1, None).unwrap();
        assert!(verify(&q, &w, 1e-9).unwrap().accepted, "n = {n}");
    }
}

#[test]
fn solve_reports_the_best_residual_on_failure() {
    let w = WeightSpec::constant(Domain::Circle);
    match solve_quadrature(&w, 2, 1, None) {
        Err(ConstructError::NonConvergence { best_residual, .. }) => assert!(best_residual > 0.1),
        other => panic!("expected non-convergence, got {other:?}"),
    }
    assert!(solve_quadrature(&w, 2, 3, Some(&[0.0, 1.0])).is_err());
}

#[test]
fn solve_is_deterministic() {
    let w = abs_sin();
    let a = solve_quadrature(&w, 5, node_bound(&w, 5), None).unwrap();
    let b = solve_quadrature(&w, 5, node_bound(&w, 5), None).unwrap();
    assert_eq!(a, b);
}

#[test]
fn faithful_constant_weight_degree_one() {
    let w = WeightSpec::constant(Domain::Circle);
    let q = kane_construct(&w, 1, 3).unwrap();
    assert_eq!(q.node_count(), 3);
    assert!(verify(&q, &w, 1e-8).unwrap().accepted);
}

#[test]
fn faithful_sin_squared_degree_two() {
    let w = sin_squared();
    let big_n = node_bound(&w, 2);
    let rep = kane_construct_with(&w, 2, big_n, &FaithfulOptions::default()).unwrap();
    assert!(rep.residual <= 1e-8);
    assert!(verify(&rep.quadrature, &w, 1e-8).unwrap().accepted);
    // points on the moment curve are in cyclic position: every sample is a vertex
    assert_eq!(rep.hull_vertices, rep.sample_size);
    assert_eq!(rep.lemma_violations.last(), Some(&0));
}

#[test]
fn faithful_refuses_below_the_existence_bound() {
    let w = WeightSpec::constant(Domain::Circle);
    assert!(matches!(kane_construct(&w, 2, 1), Err(ConstructError::Precondition(_))));
    assert!(matches!(kane_construct(&w, 4, 20), Err(ConstructError::InvalidInput(_))));
    assert!(kane_construct(&WeightSpec::constant(Domain::Interval), 1, 3).is_err());
}

#[test]
fn faithful_and_solver_both_verify_for_constant_weight() {
    let w = WeightSpec::constant(Domain::Circle);
    for n in 1..=2 {
        let big_n = node_bound(&w, n);
        let a = kane_construct(&w, n, big_n).unwrap();
        let b = solve_quadrature(&w, n, big_n, None).unwrap();
        assert!(verify(&a, &w, 1e-8).unwrap().accepted);
        assert!(verify(&b, &w, 1e-9).unwrap().accepted);
    }
}

#[test]
fn brute_force_on_constant_weight() {
    let w = WeightSpec::constant(Domain::Circle);
    assert_eq!(brute_force_min_n(&w, 1, 8, 32).unwrap(), Some(2));
    assert_eq!(brute_force_min_n(&w, 2, 8, 32).unwrap(), Some(3));
    assert_eq!(brute_force_min_n(&w, 3, 3, 32).unwrap(), None);
}

#[test]
fn brute_force_never_exceeds_the_node_bound() {
    for (name, w) in circle_weights() {
        for n in 1..=3 {
            let bound = node_bound(&w, n);
            let found = brute_force_min_n(&w, n, 8, 64).unwrap();
            if let Some(b) = found {
                assert!(b <= bound, "{name} n = {n}: brute {b} > bound {bound}");
            } else {
                // acceptable only when the bound itself is out of brute-force range
                assert!(bound > 8, "{name} n = {n}: nothing found up to 8 but bound {bound}");
            }
        }
    }
}

#[test]
fn brute_force_rejects_oversized_instances() {
    let w = WeightSpec::constant(Domain::Circle);
    assert!(brute_force_min_n(&w, 4, 8, 32).is_err());
    assert!(brute_force_min_n(&w, 2, 9, 32).is_err());
    assert!(brute_force_min_n(&w, 2, 8, 65).is_err());
}

#[test]
fn circle_to_interval_transfer_gives_chebyshev_type_rule() {
    // 2N equispaced circle nodes for the constant weight map to the arcsine weight
    let n = 6;
    let nodes: Vec<f64> = (0..2 * n).map(|j| -PI + PI * (j as f64 + 0.5) / n as f64).collect();
    let q = Quadrature::with_mass(Domain::Circle, 2 * n - 1, nodes, 2.0 * PI).unwrap();
    let t = transfer_nodes(&q);
    assert_eq!(t.domain(), Domain::Interval);
    assert_eq!(t.node_count(), 2 * n);
    assert_eq!(t.degree(), 2 * n - 1);
    assert!(verify(&t, &WeightSpec::jacobi(-0.5, -0.5).unwrap(), 1e-10).unwrap().accepted);
}

#[test]
fn interval_to_circle_transfer_doubles_the_nodes() {
    let n = 5;
    let q = Quadrature::new(Domain::Interval, 2 * n - 1, chebyshev_points(n), PI / n as f64).unwrap();
    let c = transfer_nodes(&q);
    assert_eq!(c.node_count(), 2 * n);
    assert!(verify(&c, &WeightSpec::constant(Domain::Circle), 1e-10).unwrap().accepted);
    let back = transfer_nodes(&c);
    assert_eq!(back.node_count(), 2 * n);
    for (i, t) in q.nodes().iter().enumerate() {
        assert_relative_eq!(back.nodes()[2 * i], *t, epsilon = 1e-12);
        assert_relative_eq!(back.nodes()[2 * i + 1], *t, epsilon = 1e-12);
    }
}

#[test]
fn exactness_transfers_from_the_lift() {
    for base in [WeightSpec::jacobi(0.5, 0.5).unwrap(), WeightSpec::jacobi(1.0, 0.0).unwrap()] {
        let lift = base.lift_to_circle().unwrap();
        let n = 5;
        let q = solve_quadrature(&lift, n, node_bound(&lift, n), None).unwrap();
        assert!(verify(&q, &lift, 1e-9).unwrap().accepted);
        let t = transfer_nodes(&q);
        let rep = verify(&t, &base, 1e-9).unwrap();
        assert!(rep.accepted, "{:e}", rep.max_residual);
    }
}

#[test]
fn certificates_never_exclude_constructed_quadratures() {
    for (name, w) in circle_weights() {
        let l_hat = w.known_doubling_constant().unwrap_or(8.0);
        for n in [4, 8, 12] {
            let big_n = node_bound(&w, n);
            let q = solve_quadrature(&w, n, big_n, None).unwrap();
            for ell in [None, Some(1), Some(2), Some(3)] {
                let c = certificate(&w, n, l_hat, ell, None).unwrap();
                assert!(
                    !c.excludes(q.node_count()),
                    "{name} n = {n} ℓ = {ell:?}: threshold {} excludes a verified {big_n}-node rule",
                    c.threshold
                );
            }
        }
    }
}

#[test]
fn feasibility_above_a_feasible_count() {
    // larger node counts need not be feasible in general; record what happens
    for (name, w) in circle_weights() {
        for n in [3, 6] {
            let base = node_bound(&w, n);
            let ok: Vec<bool> = (0..3).map(|k| solve_quadrature(&w, n, base + k, None).is_ok()).collect();
            println!("{name} n = {n}: N = {base}, {}, {} -> {ok:?}", base + 1, base + 2);
            assert!(ok[0]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn equispaced_rules_verify_at_any_rotation(n in 2usize..24, shift in -PI..PI) {
        let w = WeightSpec::constant(Domain::Circle);
        let x: Vec<f64> = equispaced(n).into_iter().map(|t| t + shift).collect();
        let q = Quadrature::with_mass(Domain::Circle, n - 1, x, 2.0 * PI).unwrap();
        prop_assert!(verify(&q, &w, 1e-10).unwrap().accepted);
        prop_assert!((q.equal_weight() * n as f64 - 2.0 * PI).abs() <= 1e-10 * 2.0 * PI);
    }

    #[test]
    fn solver_output_reverifies(n in 1usize..10, extra in 1usize..4) {
        let w = WeightSpec::constant(Domain::Circle);
        if let Ok(q) = solve_quadrature(&w, n, n + extra, None) {
            prop_assert!(verify(&q, &w, 1e-9).unwrap().accepted);
            prop_assert!(q.nodes().windows(2).all(|p| p[0] <= p[1]));
        }
    }

    #[test]
    fn moment_map_is_continuous(x in -PI..PI, h in 1e-9f64..1e-6) {
        let mm = MomentMap::new(&sin_squared(), 3).unwrap();
        let a = mm.at(x).entries;
        let b = mm.at(x + h).entries;
        let lip = 3.0 * mm.mass();
        prop_assert!(a.iter().zip(&b).all(|(p, q)| (p - q).abs() <= lip * h * 1.0001));
    }
}

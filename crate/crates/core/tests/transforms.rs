use santalo_core::costs::CostSpec;
use santalo_core::functional::{admissibility_slack, bs_value, exponents_from_cost};
use santalo_core::geometry::{CartesianGrid, DirectionGrid, GridFunction, ReferenceMeasure, StarBody};
use santalo_core::transforms::{
    best_response_cycle, body_tuple_max_cost, c_legendre_component, c_polar_component, homogeneous_lift, BodyTuple,
    FunctionTuple, Strategy,
};
use num_rational::Rational64;

fn grid1() -> CartesianGrid {
    CartesianGrid::default_for(1)
}

fn ints(v: &[i64]) -> Vec<Rational64> {
    v.iter().map(|x| Rational64::from_integer(*x)).collect()
}

#[test]
fn cubic_is_self_dual_for_triple_product() {
    let g = grid1();
    let cube = GridFunction::from_fn(&g, |x| x[0].abs().powi(3) / 3.0);
    let t = FunctionTuple::new(vec![cube.clone(), cube.clone(), cube], CostSpec::product(3, 1), vec![1.0; 3]).unwrap();
    let out = c_legendre_component(&t, 0).unwrap();
    assert_eq!(out.strategy, Strategy::Separable);
    for k in 0..g.points {
        let x = g.coord(k);
        if x.abs() <= 4.0 {
            let exact = x.abs().powi(3) / 3.0;
            assert!((out.function.value(k) - exact).abs() < 1e-2 * (1.0 + exact), "x={x}");
        }
    }
    assert_eq!(out.asymmetry, 0.0);
}

#[test]
fn quadratic_is_self_dual() {
    let g = grid1();
    let q = GridFunction::from_fn(&g, |x| 0.5 * x[0] * x[0]);
    let t = FunctionTuple::new(vec![q.clone(), q], CostSpec::product(2, 1), vec![1.0; 2]).unwrap();
    let out = c_legendre_component(&t, 0).unwrap();
    for k in 0..g.points {
        let x = g.coord(k);
        if x.abs() <= 6.0 {
            assert!((out.function.value(k) - 0.5 * x * x).abs() < 2e-3, "x={x}");
        }
    }
}

#[test]
fn zero_potential_gives_truncated_absolute_value() {
    let g = grid1();
    let t = FunctionTuple::new(
        vec![GridFunction::from_fn(&g, |_| 0.0), GridFunction::from_fn(&g, |_| 0.0)],
        CostSpec::product(2, 1),
        vec![1.0; 2],
    )
    .unwrap();
    let out = c_legendre_component(&t, 0).unwrap();
    for k in 0..g.points {
        let x = g.coord(k);
        assert!((out.function.value(k) - 8.0 * x.abs()).abs() < 1e-12);
    }
    assert!(out.boundary_activity > 0.99);
}

#[test]
fn brute_force_agrees_with_envelope_in_the_plane() {
    let g = CartesianGrid::new(2, 3.0, 21).unwrap();
    let v = GridFunction::from_fn(&g, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]) + 0.1 * (x[0] * x[1]).abs());
    let t = FunctionTuple::new(vec![v.clone(), v], CostSpec::inner_product(2), vec![1.0; 2]).unwrap();
    let fast = c_legendre_component(&t, 0).unwrap();
    assert_eq!(fast.strategy, Strategy::RowEnvelope);
    let custom = CostSpec::custom(2, 2, "dot", None, |x| x[0] * x[2] + x[1] * x[3]);
    let t2 = FunctionTuple::new(t.components().to_vec(), custom, vec![1.0; 2]).unwrap();
    let slow = c_legendre_component(&t2, 0).unwrap();
    assert_eq!(slow.strategy, Strategy::BruteForce);
    assert!(fast.function.distance(&slow.function) < 1e-12);
}

#[test]
fn transform_is_idempotent_on_its_image() {
    let g = grid1();
    let v = GridFunction::from_fn(&g, |x| x[0].powi(4) / 4.0 + x[0].abs());
    let t = FunctionTuple::new(vec![v.clone(), v], CostSpec::product(2, 1), vec![1.0; 2]).unwrap();
    let w1 = c_legendre_component(&t, 1).unwrap().function;
    let t = t.with_component(1, w1).unwrap();
    let v1 = c_legendre_component(&t, 0).unwrap().function;
    let t2 = t.with_component(0, v1).unwrap();
    let w2 = c_legendre_component(&t2, 1).unwrap().function;
    assert!(w2.distance(t.component(1)) < 1e-9);
}

#[test]
fn polar_of_interval_pair_under_triple_product() {
    let d = DirectionGrid::default_for(1);
    let bodies = BodyTuple::new(
        vec![StarBody::interval(2.0).unwrap(), StarBody::interval(1.0).unwrap(), StarBody::interval(1.0).unwrap()],
        CostSpec::product(3, 1),
    )
    .unwrap();
    let out = c_polar_component(&bodies, 2).unwrap();
    assert_eq!(out.body.grid(), &d);
    assert!((out.body.radial()[0] - 0.5).abs() < 1e-12);
}

#[test]
fn polar_of_cross_polytope_is_the_cube() {
    let d = DirectionGrid::default_for(2);
    let b1 = StarBody::lp_ball(&d, 1.0).unwrap();
    let binf = StarBody::lp_ball(&d, f64::INFINITY).unwrap();
    let bodies = BodyTuple::new(vec![b1.clone(), b1], CostSpec::inner_product(2)).unwrap();
    let out = c_polar_component(&bodies, 1).unwrap();
    for (a, b) in out.body.radial().iter().zip(binf.radial()) {
        assert!((a - b).abs() < 1e-9);
    }
    assert!(out.body.is_convex());
}

#[test]
fn cubic_ball_is_self_polar_for_triple_product() {
    let d = DirectionGrid::default_for(2);
    let b3 = StarBody::lp_ball(&d, 3.0).unwrap();
    let bodies = BodyTuple::new(vec![b3.clone(), b3.clone(), b3.clone()], CostSpec::product(3, 2)).unwrap();
    let out = c_polar_component(&bodies, 2).unwrap();
    for (a, b) in out.body.radial().iter().zip(b3.radial()) {
        assert!((a - b).abs() < 1e-3 * b, "{a} vs {b}");
    }
    let top = body_tuple_max_cost(&bodies).unwrap();
    assert!((top - 1.0).abs() < 1e-3);
}

#[test]
fn bipolar_returns_the_body() {
    let d = DirectionGrid::default_for(2);
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(7);
    let k = StarBody::random_polygon(&d, &mut rng, 9, 0.5, 2.0).unwrap();
    let cost = CostSpec::inner_product(2);
    let polar = c_polar_component(&BodyTuple::new(vec![k.clone(), k.clone()], cost.clone()).unwrap(), 1).unwrap().body;
    let back = c_polar_component(&BodyTuple::new(vec![k.clone(), polar], cost).unwrap(), 0).unwrap().body;
    let worst = back.radial().iter().zip(k.radial()).map(|(a, b)| (a - b).abs() / b).fold(0.0, f64::max);
    // corners of K are cut by one direction step of the sampled polar
    assert!(worst < 1e-2, "{worst}");
    let inside = back.radial().iter().zip(k.radial()).map(|(a, b)| (b - a) / b).fold(f64::MIN, f64::max);
    assert!(inside < 1e-12, "{inside}");
}

#[test]
fn lift_of_classical_pair_is_half_squared_gauge() {
    let g = grid1();
    let exp = exponents_from_cost(&ints(&[1, 1]), &ints(&[0, 0]), 1).unwrap();
    let b = StarBody::interval(1.0).unwrap();
    let bodies = BodyTuple::new(vec![b.clone(), b], CostSpec::product(2, 1)).unwrap();
    let t = homogeneous_lift(&bodies, &exp, &g).unwrap();
    for k in 0..g.points {
        let x = g.coord(k);
        assert!((t.component(0).value(k) - 0.5 * x * x).abs() < 1e-12);
    }
    let bs = bs_value(&t, &[ReferenceMeasure::lebesgue(1)]).unwrap();
    assert!((bs - 2.0 * std::f64::consts::PI).abs() < 1e-3);
}

#[test]
fn lift_refuses_inadmissible_bodies() {
    let g = grid1();
    let exp = exponents_from_cost(&ints(&[1, 1]), &ints(&[0, 0]), 1).unwrap();
    let bodies =
        BodyTuple::new(vec![StarBody::interval(2.0).unwrap(), StarBody::interval(1.0).unwrap()], CostSpec::product(2, 1))
            .unwrap();
    assert!(homogeneous_lift(&bodies, &exp, &g).is_err());
}

#[test]
fn lift_of_planar_product_tuple_is_admissible() {
    let g = CartesianGrid::new(2, 3.0, 41).unwrap();
    let d = DirectionGrid::default_for(2);
    let b3 = StarBody::lp_ball(&d, 3.0).unwrap();
    let cost = CostSpec::product(3, 2);
    let polar = c_polar_component(&BodyTuple::new(vec![b3.clone(), b3.clone(), b3.clone()], cost.clone()).unwrap(), 2)
        .unwrap()
        .body;
    let bodies = BodyTuple::new(vec![b3.clone(), b3, polar], cost).unwrap();
    let exp = exponents_from_cost(&ints(&[1, 1, 1]), &ints(&[0, 0, 0]), 2).unwrap();
    let t = homogeneous_lift(&bodies, &exp, &g).unwrap();
    let s = admissibility_slack(&t, 20_000, 3);
    assert!(s.min_slack > -1e-6, "{s:?}");
}

#[test]
fn cycle_from_large_constants_is_monotone() {
    let g = grid1();
    let c = GridFunction::from_fn(&g, |x| 50.0 + x[0] * x[0]);
    let t = FunctionTuple::new(vec![c.clone(), c], CostSpec::product(2, 1), vec![1.0; 2]).unwrap();
    let (out, trace) = best_response_cycle(&t, &[ReferenceMeasure::lebesgue(1)], 20, 1e-9).unwrap();
    assert!(trace.monotone);
    assert!(trace.bs_values.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-10)));
    let s = admissibility_slack(&out, 5000, 1);
    assert!(s.min_slack >= -1e-9);
}

#[test]
fn cycle_fixes_the_quadratic_pair() {
    let g = grid1();
    let q = GridFunction::from_fn(&g, |x| 0.5 * x[0] * x[0]);
    let t = FunctionTuple::new(vec![q.clone(), q], CostSpec::product(2, 1), vec![1.0; 2]).unwrap();
    let (out, trace) = best_response_cycle(&t, &[ReferenceMeasure::lebesgue(1)], 5, 1e-2).unwrap();
    assert!(trace.converged);
    assert!(out.component(0).distance(t.component(0)) < 1e-2 * 33.0);
}

#[test]
fn bipolar_of_smooth_ball_is_tight() {
    let d = DirectionGrid::default_for(2);
    let k = StarBody::lp_ball(&d, 3.0).unwrap();
    let cost = CostSpec::inner_product(2);
    let polar = c_polar_component(&BodyTuple::new(vec![k.clone(), k.clone()], cost.clone()).unwrap(), 1).unwrap().body;
    let back = c_polar_component(&BodyTuple::new(vec![k.clone(), polar], cost).unwrap(), 0).unwrap().body;
    let worst = back.radial().iter().zip(k.radial()).map(|(a, b)| (a - b).abs() / b).fold(0.0, f64::max);
    assert!(worst < 1e-3, "{worst}");
}

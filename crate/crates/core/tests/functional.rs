use std::f64::consts::PI;

use num_rational::Rational64;
use santalo_core::costs::{CostFamily, CostSpec};
use santalo_core::functional::{
    admissibility_slack, bs_set_value, bs_value, exact_admissibility_slack, exponents_from_cost, rescaled_tuple,
    stationarity_check, weighted_product_inequality_check, ExponentSystem, OrthantQuadrature, WeightProfile,
};
use santalo_core::geometry::{CartesianGrid, DirectionGrid, GridFunction, MeasureKind, ReferenceMeasure, StarBody};
use santalo_core::transforms::{c_legendre_component, c_polar_component, BodyTuple, FunctionTuple};
use statrs::function::gamma::gamma;


type Density = dyn Fn(&[f64]) -> f64 + Sync;
fn q(a: i64, b: i64) -> Rational64 {
    Rational64::new(a, b)
}

fn ints(v: &[i64]) -> Vec<Rational64> {
    v.iter().map(|x| Rational64::from_integer(*x)).collect()
}

fn gaussian_pair() -> FunctionTuple {
    let g = CartesianGrid::default_for(1);
    let v = GridFunction::from_fn(&g, |x| 0.5 * x[0] * x[0]);
    FunctionTuple::new(vec![v.clone(), v], CostSpec::product(2, 1), vec![1.0, 1.0]).unwrap()
}

fn cubic_triple(n: usize) -> FunctionTuple {
    let g = CartesianGrid::default_for(n);
    let v = GridFunction::separable_from_profile(&g, |t| t.powi(3) / 3.0);
    FunctionTuple::new(vec![v.clone(), v.clone(), v], CostSpec::product(3, n), vec![1.0; 3]).unwrap()
}

#[test]
fn exponent_oracles() {
    let classical = exponents_from_cost(&ints(&[1, 1]), &ints(&[0, 0]), 3).unwrap();
    assert_eq!(classical.alpha, ints(&[1, 1]));
    assert_eq!(classical.beta, ints(&[2, 2]));
    assert_eq!(classical.tau, vec![q(1, 2), q(1, 2)]);
    assert_eq!(classical.joint, q(2, 1));
    assert_eq!(classical.a, q(2, 1));
    for nn in 2..6usize {
        let e = exponents_from_cost(&vec![q(1, 1); nn], &vec![q(0, 1); nn], 2).unwrap();
        assert!(e.alpha.iter().all(|a| *a == q(1, 1)));
        assert!(e.beta.iter().all(|b| *b == q(nn as i64, 1)));
        assert!(e.tau.iter().all(|t| *t == q(1, nn as i64)));
        assert_eq!(e.joint, q(nn as i64, 1));
    }
    // degrees 1/alpha_i with flat densities: beta_i = A
    let alpha = [q(1, 1), q(2, 1), q(3, 2)];
    let p: Vec<Rational64> = alpha.iter().map(|a| a.recip()).collect();
    let e = exponents_from_cost(&p, &ints(&[0, 0, 0]), 2).unwrap();
    assert_eq!(e.alpha, alpha.to_vec());
    assert!(e.beta.iter().all(|b| *b == e.a));
    let r = e.residuals();
    assert_eq!((r.joint_degree, r.equal_ratios, r.holder_budget), (q(0, 1), q(0, 1), q(0, 1)));
}

#[test]
fn barycentric_cost_is_refused_by_the_exponent_system() {
    let bary = CostSpec::new(3, 1, CostFamily::Barycentric).unwrap();
    assert!(ExponentSystem::for_cost(&bary, ints(&[0, 0, 0])).is_err());
}

#[test]
fn bs_value_oracles() {
    let leb = [ReferenceMeasure::lebesgue(1)];
    assert!((bs_value(&gaussian_pair(), &leb).unwrap() - 2.0 * PI).abs() < 1e-5);
    let oracle = (2.0 * gamma(1.0 / 3.0) / 3f64.powf(2.0 / 3.0)).powi(3);
    assert!((oracle - 17.09).abs() < 0.01);
    assert!((bs_value(&cubic_triple(1), &leb).unwrap() - oracle).abs() < 1e-3 * oracle);
}

#[test]
fn indicator_tuple_matches_set_value() {
    let g = CartesianGrid::new(1, 4.0, 8001).unwrap();
    let ind = |a: f64| GridFunction::indicator(&g, move |x| x[0].abs() <= a);
    let t = FunctionTuple::new(vec![ind(1.0), ind(1.0), ind(1.0)], CostSpec::product(3, 1), vec![1.0; 3]).unwrap();
    let leb = [ReferenceMeasure::lebesgue(1)];
    let seg = StarBody::interval(1.0).unwrap();
    let bodies = BodyTuple::new(vec![seg.clone(), seg.clone(), seg], CostSpec::product(3, 1)).unwrap();
    let set = bs_set_value(&bodies, &[1.0; 3], &leb).unwrap();
    assert!((set - 8.0).abs() < 1e-12);
    assert!((bs_value(&t, &leb).unwrap() - set).abs() < 3.0 * 4.0 * g.spacing() * 2.0);
}

#[test]
fn set_value_oracles() {
    let d = DirectionGrid::default_for(2);
    let leb = [ReferenceMeasure::lebesgue(2)];
    let disk = StarBody::lp_ball(&d, 2.0).unwrap();
    let pair = BodyTuple::new(vec![disk.clone(), disk], CostSpec::inner_product(2)).unwrap();
    assert!((bs_set_value(&pair, &[1.0, 1.0], &leb).unwrap() - PI * PI).abs() < 3e-4 * PI * PI);
    let square = StarBody::lp_ball(&d, f64::INFINITY).unwrap();
    let sq = BodyTuple::new(vec![square.clone(), square.clone()], CostSpec::inner_product(2)).unwrap();
    let diamond = c_polar_component(&sq, 1).unwrap().body;
    let pair = BodyTuple::new(vec![square, diamond], CostSpec::inner_product(2)).unwrap();
    assert!((bs_set_value(&pair, &[1.0, 1.0], &leb).unwrap() - 8.0).abs() < 1e-9);
}

#[test]
fn slack_oracles() {
    let t = cubic_triple(1);
    let s = admissibility_slack(&t, 10_000, 1);
    assert!(s.min_slack.abs() < 1e-12);
    let w = &s.witness;
    assert!(w.iter().all(|x| (x[0] - w[0][0]).abs() < 1e-12));
    let lowered = t.with_component(0, t.component(0).shifted(-0.1)).unwrap();
    let s2 = admissibility_slack(&lowered, 10_000, 1);
    assert!((s2.min_slack + 0.1).abs() < 1e-12);
    let g = t.grid().clone();
    let zero = GridFunction::from_fn(&g, |_| 0.0);
    let z = FunctionTuple::new(vec![zero.clone(), zero.clone(), zero], CostSpec::product(3, 1), vec![1.0; 3]).unwrap();
    assert!(admissibility_slack(&z, 100, 1).min_slack < 0.0);
    let exact = exact_admissibility_slack(&t).unwrap();
    assert!(exact.min_slack > -1e-9);
}

#[test]
fn exact_slack_witness_attains_the_slack() {
    let g = CartesianGrid::default_for(1);
    let v = GridFunction::from_fn(&g, |x| 0.25 * x[0] * x[0]);
    let t = FunctionTuple::new(vec![v.clone(), v], CostSpec::product(2, 1), vec![1.0, 1.0]).unwrap();
    let s = exact_admissibility_slack(&t).unwrap();
    assert_eq!(s.witness.len(), 2);
    let (x, y) = (s.witness[0][0], s.witness[1][0]);
    assert!((0.25 * x * x + 0.25 * y * y - x * y - s.min_slack).abs() < 1e-12, "{s:?}");
    assert!((s.min_slack + 32.0).abs() < 1e-12);
}

#[test]
fn gaussian_pair_is_stationary() {
    let t = gaussian_pair();
    let exp = exponents_from_cost(&ints(&[1, 1]), &ints(&[0, 0]), 1).unwrap();
    let r = stationarity_check(&t, &exp, &[ReferenceMeasure::lebesgue(1)], None).unwrap();
    assert!((r.target - 1.0).abs() < 1e-15);
    assert!(r.first_order_residual.abs() < 1e-3, "{r:?}");
    assert!((r.weighted_variance - 1.0).abs() < 5e-3, "{r:?}");
    assert!(r.homogeneity.iter().all(|h| (h - 2.0).abs() < 1e-3), "{r:?}");
    assert!(r.coupling_cost.is_none());
}

#[test]
fn gaussian_pair_with_diagonal_coupling_is_second_order_tight() {
    let t = gaussian_pair();
    let exp = exponents_from_cost(&ints(&[1, 1]), &ints(&[0, 0]), 1).unwrap();
    let g = t.grid().clone();
    let atoms: Vec<(Vec<Vec<f64>>, f64)> = (0..g.points)
        .map(|k| {
            let x = g.coord(k);
            (vec![vec![x], vec![x]], g.axis_weight(k) * (-0.5 * x * x).exp())
        })
        .collect();
    let r = stationarity_check(&t, &exp, &[ReferenceMeasure::lebesgue(1)], Some(&atoms)).unwrap();
    assert!((r.coupling_cost.unwrap() - 1.0).abs() < 1e-6);
    assert!(r.second_order_slack.unwrap().abs() < 1e-6);
    assert!(r.equality_residual.unwrap() < 1e-9);
}

#[test]
fn truncated_quadratic_is_flagged_as_non_stationary() {
    let g = CartesianGrid::default_for(1);
    let v = GridFunction::from_fn(&g, |x| if x[0].abs() <= 1.0 { x[0] * x[0] } else { f64::INFINITY });
    let zero = GridFunction::from_fn(&g, |_| 0.0);
    let t = FunctionTuple::new(vec![v, zero], CostSpec::product(2, 1), vec![1.0, 1.0]).unwrap();
    let w = c_legendre_component(&t, 1).unwrap().function;
    let t = t.with_component(1, w).unwrap();
    let exp = exponents_from_cost(&ints(&[1, 1]), &ints(&[0, 0]), 1).unwrap();
    let r = stationarity_check(&t, &exp, &[ReferenceMeasure::lebesgue(1)], None).unwrap();
    assert!(r.first_order_residual.abs() > 0.05, "{r:?}");
}

#[test]
fn scaling_covariance_at_two() {
    // p = (1, 1), r = (0, 2), n = 1 gives beta = (4/3, 4), joint degree 2, so
    // the two components are rescaled in opposite directions
    let exp = exponents_from_cost(&ints(&[1, 1]), &ints(&[0, 2]), 1).unwrap();
    assert_eq!(exp.joint, q(2, 1));
    let g = CartesianGrid::new(1, 10.0, 4001).unwrap();
    let v1 = GridFunction::from_fn(&g, |x| 0.5 * x[0] * x[0] + 0.2 * x[0].abs());
    let v2 = GridFunction::from_fn(&g, |x| 0.25 * x[0] * x[0] + 0.1 * x[0].powi(4));
    let t = FunctionTuple::new(vec![v1, v2], CostSpec::product(2, 1), exp.alpha_f64()).unwrap();
    let ms = [ReferenceMeasure::lebesgue(1), ReferenceMeasure::new(1, MeasureKind::Power { r: 2.0 }).unwrap()];
    let s = rescaled_tuple(&t, &exp, 2.0).unwrap();
    let (a, b) = (bs_value(&t, &ms).unwrap(), bs_value(&s, &ms).unwrap());
    assert!((a - b).abs() < 1e-4 * a, "{a} vs {b}");
}

#[test]
fn weighted_product_oracles() {
    let leb = ReferenceMeasure::lebesgue(1);
    let quad = OrthantQuadrature::new(1, 8.0, 4001).unwrap();
    let cube = |x: &[f64]| (-x[0].abs().powi(3) / 3.0).exp();
    let fs: Vec<&Density> = vec![&cube, &cube, &cube];
    let r = weighted_product_inequality_check(&fs, &WeightProfile::exp_neg(), &[1.0; 3], &leb, &quad, 2000, 1).unwrap();
    assert!(r.pass);
    assert!((r.lhs - r.rhs).abs() < 1e-2 * r.rhs, "{r:?}");

    let (a1, a2) = (0.5, 1.6);
    let f1 = move |x: &[f64]| if x[0] <= a1 { 1.0 } else { 0.0 };
    let f2 = move |x: &[f64]| if x[0] <= a2 { 1.0 } else { 0.0 };
    let fs: Vec<&Density> = vec![&f1, &f2];
    let quad = OrthantQuadrature::new(1, 4.0, 40001).unwrap();
    let r = weighted_product_inequality_check(&fs, &WeightProfile::indicator(1.0), &[1.0; 2], &leb, &quad, 2000, 1)
        .unwrap();
    assert!((r.lhs - a1 * a2).abs() < 1e-3 && (r.rhs - 1.0).abs() < 1e-3 && r.pass, "{r:?}");

    let bad = move |x: &[f64]| if x[0] <= 2.0 { 1.0 } else { 0.0 };
    let fs: Vec<&Density> = vec![&bad, &bad];
    assert!(weighted_product_inequality_check(&fs, &WeightProfile::indicator(1.0), &[1.0; 2], &leb, &quad, 2000, 1).is_err());
}

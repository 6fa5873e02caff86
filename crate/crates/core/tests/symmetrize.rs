use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use santalo_core::costs::CostSpec;
use santalo_core::functional::bs_set_value;
use santalo_core::geometry::{DirectionGrid, MeasureKind, ReferenceMeasure, StarBody};
use santalo_core::symmetrize::{jii_symmetrize, section_average_excess, unconditionalize};
use santalo_core::transforms::{body_tuple_max_cost, c_polar_component, BodyTuple};
use santalo_core::Error;

fn random_admissible(rng: &mut ChaCha8Rng, nn: usize) -> BodyTuple {
    let grid = DirectionGrid::default_for(2);
    let bodies: Vec<StarBody> = (0..nn).map(|_| StarBody::random_polygon(&grid, rng, 7, 0.4, 1.6).unwrap()).collect();
    let t = BodyTuple::new(bodies, CostSpec::product(nn, 2)).unwrap();
    let last = c_polar_component(&t, nn - 1).unwrap().body;
    t.with_body(nn - 1, last).unwrap()
}

fn axis_symmetric(rng: &mut ChaCha8Rng) -> StarBody {
    let grid = DirectionGrid::default_for(2);
    let b = StarBody::random_polygon(&grid, rng, 7, 0.4, 1.6).unwrap();
    let r: Vec<f64> = (0..grid.len()).map(|k| b.radial()[k].min(b.radial()[grid.flip(k, 0)])).collect();
    StarBody::from_radial(&grid, r).unwrap()
}

#[test]
fn steps_do_not_decrease_measures() {
    let leb = ReferenceMeasure::lebesgue(2);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst_rel: f64 = 0.0;
    for trial in 0..30 {
        let nn = 2 + trial % 2;
        let t = random_admissible(&mut rng, nn);
        let j = trial % 2;
        let (out, step) = jii_symmetrize(&t, j, 0, nn - 1, &leb, &leb).unwrap();
        assert!(step.monotone, "{step:?}");
        assert!(step.after_i2 >= step.before_i2_polar * (1.0 - 1e-3), "{step:?}");
        assert!(step.slack_after >= -1e-6, "{step:?}");
        assert!(step.section_excess <= 1e-6, "{step:?}");
        assert!(body_tuple_max_cost(&out).unwrap() <= 1.0 + 1e-6);
        worst_rel = worst_rel.max((step.before_i1 - step.after_i1) / step.before_i1);
    }
    assert!(worst_rel < 1e-3, "{worst_rel}");
}

#[test]
fn symmetric_inputs_are_fixed() {
    let leb = ReferenceMeasure::lebesgue(2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = axis_symmetric(&mut rng);
    let t = BodyTuple::new(vec![a.clone(), a], CostSpec::product(2, 2)).unwrap();
    let last = c_polar_component(&t, 1).unwrap().body;
    let t = t.with_body(1, last).unwrap();
    // symmetric about x_1 = 0, so Steiner along e_1 changes nothing
    let (out, step) = jii_symmetrize(&t, 0, 0, 1, &leb, &leb).unwrap();
    assert!((step.after_i1 - step.before_i1).abs() < 1e-9 * step.before_i1);
    assert!((step.after_i2 - step.before_i2).abs() < 1e-9 * step.before_i2);
    for (x, y) in out.body(0).radial().iter().zip(t.body(0).radial()) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn section_averages_are_contained() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let t = random_admissible(&mut rng, 2);
    let a = c_polar_component(&t, 1).unwrap().body;
    let (out, _) = jii_symmetrize(&t, 1, 0, 1, &ReferenceMeasure::lebesgue(2), &ReferenceMeasure::lebesgue(2)).unwrap();
    assert!(section_average_excess(&a, out.body(1), 1, 200) <= 1e-9);
    // a body does not contain the averaged sections of a larger one
    let grid = DirectionGrid::default_for(2);
    let big = StarBody::lp_ball(&grid, 2.0).unwrap();
    let small = StarBody::from_radial(&grid, vec![0.5; grid.len()]).unwrap();
    assert!(section_average_excess(&big, &small, 0, 16) > 0.4);
}

#[test]
fn gaussian_measures_also_increase() {
    let g = ReferenceMeasure::gaussian(2);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..5 {
        let t = random_admissible(&mut rng, 2);
        let (_, step) = jii_symmetrize(&t, 0, 0, 1, &g, &g).unwrap();
        assert!(step.monotone, "{step:?}");
    }
}

#[test]
fn hypotheses_are_checked_first() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let t = random_admissible(&mut rng, 2);
    let leb = ReferenceMeasure::lebesgue(2);
    let bump = ReferenceMeasure::custom(2, |x| 1.0 + x[0] * x[0], None, false, true);
    assert!(matches!(jii_symmetrize(&t, 0, 0, 1, &bump, &leb), Err(Error::Hypothesis(_))));
    let shifted = ReferenceMeasure::custom(2, |x| (-(x[0] - 1.0).powi(2)).exp(), None, true, false);
    assert!(matches!(jii_symmetrize(&t, 1, 0, 1, &leb, &shifted), Err(Error::Hypothesis(_))));
    // an inadmissible tuple
    let grid = DirectionGrid::default_for(2);
    let big = StarBody::from_radial(&grid, vec![2.0; grid.len()]).unwrap();
    let bad = BodyTuple::new(vec![big.clone(), big], CostSpec::product(2, 2)).unwrap();
    assert!(matches!(jii_symmetrize(&bad, 0, 0, 1, &leb, &leb), Err(Error::Hypothesis(_))));
    // a cost without sign symmetry
    let skew = CostSpec::custom(2, 2, "skew", Some(vec![1.0, 1.0]), |x| x[0] * x[2] + x[0] * x[3]);
    let t2 = BodyTuple::new(t.bodies().to_vec(), skew).unwrap();
    assert!(jii_symmetrize(&t2, 0, 0, 1, &leb, &leb).is_err());
}

#[test]
fn unconditionalize_random_tuples() {
    let leb = [ReferenceMeasure::lebesgue(2)];
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for trial in 0..6 {
        let nn = 2 + trial % 2;
        let t = random_admissible(&mut rng, nn);
        let alpha = vec![1.0; nn];
        let before = bs_set_value(&t, &alpha, &leb).unwrap();
        let (out, rep) = unconditionalize(&t, &leb, &alpha, 4).unwrap();
        assert!(rep.residual <= 1e-6);
        assert!(rep.values_monotone() && rep.measures_monotone(), "{:?} {:?}", rep.values, rep.measures);
        assert!(bs_set_value(&out, &alpha, &leb).unwrap() >= before * (1.0 - 1e-3));
        assert!(body_tuple_max_cost(&out).unwrap() <= 1.0 + 1e-6);
        assert!(rep.rounds <= 2);
    }
}

#[test]
fn rotated_square_becomes_unconditional() {
    let grid = DirectionGrid::default_for(2);
    let (c, s) = (0.3f64.cos(), 0.3f64.sin());
    let sq = |x: &[f64]| (c * x[0] + s * x[1]).abs().max((-s * x[0] + c * x[1]).abs());
    let a = StarBody::from_gauge(&grid, sq).unwrap();
    let t = BodyTuple::new(vec![a.clone(), a], CostSpec::product(2, 2)).unwrap();
    let scale = body_tuple_max_cost(&t).unwrap().sqrt();
    let a = StarBody::from_gauge(&grid, |x| scale * sq(x)).unwrap();
    let t = BodyTuple::new(vec![a.clone(), a], CostSpec::product(2, 2)).unwrap();
    let leb = [ReferenceMeasure::lebesgue(2)];
    let (out, rep) = unconditionalize(&t, &leb, &[1.0, 1.0], 3).unwrap();
    assert!(out.bodies().iter().all(|b| b.unconditional_residual() <= 1e-6));
    assert!(rep.measures_monotone(), "{:?}", rep.measures);
}

#[test]
fn unconditional_input_is_unchanged() {
    let grid = DirectionGrid::default_for(2);
    let d = StarBody::lp_ball(&grid, 1.0).unwrap();
    let t = BodyTuple::new(vec![d.clone(), c_polar_component(&BodyTuple::new(vec![d.clone(), d.clone()], CostSpec::product(2, 2)).unwrap(), 1).unwrap().body], CostSpec::product(2, 2)).unwrap();
    let (out, rep) = unconditionalize(&t, &[ReferenceMeasure::lebesgue(2)], &[1.0, 1.0], 2).unwrap();
    assert_eq!(rep.rounds, 0);
    for (a, b) in out.bodies().iter().zip(t.bodies()) {
        for (x, y) in a.radial().iter().zip(b.radial()) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

#[test]
fn unconditionalize_needs_unconditional_measures() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let t = random_admissible(&mut rng, 2);
    let m = ReferenceMeasure::new(2, MeasureKind::Power { r: 1.0 }).unwrap();
    // declared log-concave? the power density |x| is not
    let err = unconditionalize(&t, &[m], &[1.0, 1.0], 2).unwrap_err();
    assert!(matches!(err, Error::Hypothesis(_)));
}

use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use santalo_core::geometry::{
    gauge_eval, integrate_exp, measure_of_body, steiner_symmetrize, CartesianGrid, DirectionGrid, GridFunction,
    MeasureKind, ReferenceMeasure, StarBody, SupportOracle,
};
use statrs::function::gamma::gamma;

fn circle() -> DirectionGrid {
    DirectionGrid::default_for(2)
}

fn lp_area(p: f64) -> f64 {
    (2.0 * gamma(1.0 + 1.0 / p)).powi(2) / gamma(1.0 + 2.0 / p)
}

#[test]
fn gauge_oracles() {
    let interval = StarBody::interval(2.0).unwrap();
    assert!((gauge_eval(&interval, &[3.0]).unwrap() - 1.5).abs() < 1e-15);
    let disk = StarBody::lp_ball(&circle(), 2.0).unwrap();
    // the disk is stored as an inscribed 360-gon
    assert!((gauge_eval(&disk, &[0.3, 0.4]).unwrap() - 0.5).abs() < 1e-4);
    let diamond = StarBody::lp_ball(&circle(), 1.0).unwrap();
    assert!((gauge_eval(&diamond, &[1.0, 1.0]).unwrap() - 2.0).abs() < 1e-12);
    assert!(gauge_eval(&diamond, &[1.0]).is_err());
}

#[test]
fn measure_oracles() {
    let leb2 = ReferenceMeasure::lebesgue(2);
    let disk = StarBody::lp_ball(&circle(), 2.0).unwrap();
    assert!((measure_of_body(&disk, &leb2).unwrap() - PI).abs() < 1e-4 * PI);
    let b3 = StarBody::lp_ball(&circle(), 3.0).unwrap();
    let m3 = measure_of_body(&b3, &leb2).unwrap();
    assert!((m3 - lp_area(3.0)).abs() < 1e-4 * lp_area(3.0));
    assert!((m3 - 3.533).abs() < 1e-3);
    let seg = StarBody::interval(1.0).unwrap();
    assert!((measure_of_body(&seg, &ReferenceMeasure::lebesgue(1)).unwrap() - 2.0).abs() < 1e-15);
}

#[test]
fn gaussian_measure_of_disk() {
    let disk = StarBody::lp_ball(&circle(), 2.0).unwrap();
    let m = measure_of_body(&disk, &ReferenceMeasure::gaussian(2)).unwrap();
    assert!((m - (1.0 - (-0.5f64).exp())).abs() < 1e-4);
}

#[test]
fn integrate_exp_oracles() {
    let g = CartesianGrid::default_for(1);
    let leb = ReferenceMeasure::lebesgue(1);
    let q = GridFunction::from_fn(&g, |x| 0.5 * x[0] * x[0]);
    let r = integrate_exp(&q, 1.0, &leb).unwrap();
    assert!((r.value - (2.0 * PI).sqrt()).abs() < 1e-6);
    assert!(!r.truncation_warning);
    let c = GridFunction::from_fn(&g, |x| x[0].abs().powi(3) / 3.0);
    let oracle = 2.0 * gamma(1.0 / 3.0) / 3f64.powf(2.0 / 3.0);
    assert!((integrate_exp(&c, 1.0, &leb).unwrap().value - oracle).abs() < 1e-4);
    assert!((oracle - 2.5758).abs() < 1e-4);
    let ind = GridFunction::indicator(&g, |x| x[0].abs() <= 2.0);
    // node sum over the 81 nodes of [-2, 2]: exact up to one spacing
    assert!((integrate_exp(&ind, 3.0, &leb).unwrap().value - 4.0).abs() <= g.spacing() + 1e-12);
}

#[test]
fn truncation_is_flagged() {
    let g = CartesianGrid::default_for(1);
    let flat = GridFunction::from_fn(&g, |x| 0.01 * x[0].abs());
    assert!(integrate_exp(&flat, 1.0, &ReferenceMeasure::lebesgue(1)).unwrap().truncation_warning);
}

#[test]
fn steiner_fixes_the_diamond() {
    let d = StarBody::lp_ball(&circle(), 1.0).unwrap();
    let s = steiner_symmetrize(&d, 0).unwrap();
    for (a, b) in s.radial().iter().zip(d.radial()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn steiner_of_tilted_ellipse() {
    let grid = circle();
    let e = StarBody::from_gauge(&grid, |x| (x[0] * x[0] + x[0] * x[1] + x[1] * x[1]).sqrt()).unwrap();
    let s = steiner_symmetrize(&e, 0).unwrap();
    let target = StarBody::from_gauge(&grid, |x| (x[0] * x[0] + 0.75 * x[1] * x[1]).sqrt()).unwrap();
    for (a, b) in s.radial().iter().zip(target.radial()) {
        assert!((a - b).abs() < 2e-3 * b, "{a} vs {b}");
    }
}

#[test]
fn nonconvex_bodies_are_refused_by_steiner() {
    let grid = circle();
    let star: Vec<f64> = (0..grid.len()).map(|k| if k % 2 == 0 { 1.0 } else { 0.5 }).collect();
    let body = StarBody::from_radial(&grid, star).unwrap();
    assert!(!body.is_convex());
    assert!(steiner_symmetrize(&body, 0).is_err());
}

#[test]
fn measures_verify_their_declarations() {
    for kind in [MeasureKind::Lebesgue, MeasureKind::Gaussian, MeasureKind::ExponentialProduct, MeasureKind::Power { r: 1.5 }] {
        let m = ReferenceMeasure::new(2, kind).unwrap();
        assert!(m.verify(500, 1).ok, "{m:?}");
    }
    let liar = ReferenceMeasure::custom(2, |x| (1.0 + x[0]).max(0.0), Some(0.0), true, true);
    assert!(!liar.verify(500, 1).ok);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gauge_is_one_homogeneous(seed in 0u64..1000, t in 0.1f64..10.0, a in 0.0f64..std::f64::consts::TAU) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let body = StarBody::random_polygon(&circle(), &mut rng, 7, 0.5, 2.0).unwrap();
        let x = [a.cos(), a.sin()];
        let g1 = body.gauge(&x).unwrap();
        let gt = body.gauge(&[t * x[0], t * x[1]]).unwrap();
        prop_assert!((gt - t * g1).abs() < 1e-12 * (1.0 + gt));
        let gn = body.gauge(&[-x[0], -x[1]]).unwrap();
        prop_assert!((gn - g1).abs() < 1e-12 * (1.0 + g1));
    }

    #[test]
    fn steiner_preserves_area_and_convexity(seed in 0u64..1000, axis in 0usize..2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let body = StarBody::random_polygon(&circle(), &mut rng, 8, 0.4, 2.0).unwrap();
        let s = steiner_symmetrize(&body, axis).unwrap();
        let leb = ReferenceMeasure::lebesgue(2);
        let (a, b) = (body.measure(&leb).unwrap(), s.measure(&leb).unwrap());
        prop_assert!((a - b).abs() < 1e-3 * a, "{} vs {}", a, b);
        prop_assert!(s.is_convex());
        prop_assert!(s.unconditional_residual() < 1e-9 || axis == 0 || axis == 1);
    }

    #[test]
    fn support_oracle_matches_vertex_scan(seed in 0u64..1000, a in 0.0f64..std::f64::consts::TAU) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let body = StarBody::random_polygon(&circle(), &mut rng, 7, 0.4, 1.6).unwrap();
        let w = [a.cos(), a.sin()];
        let brute = body.vertices().iter().map(|p| p[0] * w[0] + p[1] * w[1]).fold(f64::NEG_INFINITY, f64::max);
        let fast = SupportOracle::new(&body).support(w);
        prop_assert!((fast - brute).abs() < 1e-12, "{} vs {}", fast, brute);
    }

    #[test]
    fn grid_reflection_is_involutive(points in (1usize..40).prop_map(|k| 2 * k + 1), flat in 0usize..10_000) {
        let g = CartesianGrid::new(2, 1.0, points).unwrap();
        let f = flat % g.len();
        prop_assert_eq!(g.reflect(g.reflect(f)), f);
        let p = g.point_vec(f);
        let q = g.point_vec(g.reflect(f));
        prop_assert!(p.iter().zip(&q).all(|(a, b)| (a + b).abs() < 1e-12));
    }
}

#[test]
fn support_oracle_on_axis_with_collinear_runs() {
    // Hull with long collinear runs whose edge normals tie up to rounding.
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    rng.set_stream(24);
    let body = StarBody::random_polygon(&circle(), &mut rng, 7, 0.4, 1.6).unwrap();
    let oracle = SupportOracle::new(&body);
    let g = circle();
    for k in 0..g.len() {
        let d = g.dir(k);
        let brute = body.vertices().iter().map(|p| p[0] * d[0] + p[1] * d[1]).fold(f64::NEG_INFINITY, f64::max);
        assert!((oracle.support([d[0], d[1]]) - brute).abs() < 1e-12, "direction {k}");
    }
}

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use santalo_core::costs::CostSpec;
use santalo_core::geometry::{CartesianGrid, GridFunction, ReferenceMeasure};
use santalo_core::transforms::FunctionTuple;
use santalo_core::transport::{
    entropy, entropy_weights, even_maximizer, folded_transport, monotonicity_check, monotonicity_check_tuple,
    reverse_certificate, solve_entropic, solve_max_exact, solve_min_exact, transport_entropy_check, CostTensor,
    DiscreteInstance, DiscreteMeasure,
};

fn binary_product(nn: usize) -> CostTensor {
    let supports = vec![vec![vec![0.0], vec![1.0]]; nn];
    CostTensor::from_cost(&CostSpec::product(nn, 1), &supports).unwrap()
}

#[test]
fn two_by_two_product() {
    let c = binary_product(2);
    let (pi, pot) = solve_max_exact(&c, &[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
    assert!((pot.primal - 0.5).abs() < 1e-12);
    assert!(pot.gap.abs() < 1e-12);
    let dense = pi.dense();
    assert!((dense[0] - 0.5).abs() < 1e-12 && (dense[3] - 0.5).abs() < 1e-12);
    assert!(pot.max_violation(&c) <= 1e-12);
}

#[test]
fn binary_cube_triple_product() {
    let c = binary_product(3);
    let (pi, pot) = solve_max_exact(&c, &vec![vec![0.5, 0.5]; 3]).unwrap();
    assert!((pot.primal - 0.5).abs() < 1e-12 && pot.gap.abs() < 1e-12);
    let dense = pi.dense();
    assert!((dense[0] - 0.5).abs() < 1e-12 && (dense[7] - 0.5).abs() < 1e-12);
}

#[test]
fn point_mass_reduces_the_problem() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let s: Vec<Vec<Vec<f64>>> = (0..3).map(|_| (0..4).map(|_| vec![rng.gen_range(-2.0..2.0)]).collect()).collect();
    let m: Vec<Vec<f64>> = (0..3)
        .map(|_| {
            let w: Vec<f64> = (0..4).map(|_| rng.gen_range(0.1..1.0)).collect();
            let t: f64 = w.iter().sum();
            w.into_iter().map(|x| x / t).collect()
        })
        .collect();
    let p = 0.7;
    let full = CostTensor::from_cost(&CostSpec::product(3, 1), &[s[0].clone(), s[1].clone(), vec![vec![p]]]).unwrap();
    let (_, a) = solve_max_exact(&full, &[m[0].clone(), m[1].clone(), vec![1.0]]).unwrap();
    let cost2 = CostSpec::custom(2, 1, "scaled", None, move |x| p * x[0] * x[1]);
    let red = CostTensor::from_cost(&cost2, &s[..2]).unwrap();
    let (_, b) = solve_max_exact(&red, &m[..2]).unwrap();
    assert!((a.primal - b.primal).abs() < 1e-12);
}

#[test]
fn minimization_is_negated_maximization() {
    let c = binary_product(2);
    let (_, pot) = solve_min_exact(&c, &[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
    assert!(pot.primal.abs() < 1e-12);
    for (a, fa) in pot.f[0].iter().enumerate() {
        for (b, fb) in pot.f[1].iter().enumerate() {
            assert!(fa + fb <= c.values()[2 * a + b] + 1e-12);
        }
    }
}

#[test]
fn excluded_cells_are_respected() {
    let c = CostTensor::new(vec![2, 2], vec![1.0, f64::NEG_INFINITY, f64::NEG_INFINITY, 1.0]).unwrap();
    let (pi, _) = solve_max_exact(&c, &[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
    assert!(pi.dense()[1] == 0.0 && pi.dense()[2] == 0.0);
    let c = CostTensor::new(vec![2, 2], vec![1.0, f64::NEG_INFINITY, f64::NEG_INFINITY, 1.0]).unwrap();
    assert!(solve_max_exact(&c, &[vec![1.0, 0.0], vec![0.0, 1.0]]).is_err());
}

#[test]
fn entropic_oracles() {
    let c = binary_product(2);
    let m = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
    let (_, pot, rep) = solve_entropic(&c, &m, 0.01, 10_000, 1e-10).unwrap();
    assert!(rep.converged, "{rep:?}");
    assert!((pot.primal - 0.5).abs() < 0.01);
    let zero = CostTensor::new(vec![3, 2], vec![0.0; 6]).unwrap();
    let m2 = vec![vec![0.2, 0.3, 0.5], vec![0.6, 0.4]];
    let (pi, _, _) = solve_entropic(&zero, &m2, 1.0, 100, 1e-12).unwrap();
    let dense = pi.dense();
    for a in 0..3 {
        for b in 0..2 {
            assert!((dense[2 * a + b] - m2[0][a] * m2[1][b]).abs() < 1e-12);
        }
    }
    let pm = CostTensor::from_cost(&CostSpec::product(2, 1), &vec![vec![vec![-1.0], vec![1.0]]; 2]).unwrap();
    let mut last = 0.0;
    for eps in [1.0, 0.3, 0.1, 0.03] {
        let (_, pot, _) = solve_entropic(&pm, &m, eps, 10_000, 1e-12).unwrap();
        assert!(pot.primal > last);
        last = pot.primal;
    }
    assert!((last - 1.0).abs() < 1e-6);
}

#[test]
fn entropic_reports_non_convergence() {
    let c = binary_product(3);
    let (_, _, rep) = solve_entropic(&c, &vec![vec![0.3, 0.7]; 3], 0.001, 2, 1e-14).unwrap();
    assert!(!rep.converged);
    assert_eq!(rep.iterations, 2);
}

#[test]
fn entropy_oracles() {
    let pts = vec![vec![0.0], vec![1.0]];
    let mu = DiscreteMeasure::new(pts.clone(), vec![0.5, 0.5]).unwrap();
    assert_eq!(entropy(&mu, &mu).unwrap(), 0.0);
    let k = 5;
    let u = vec![1.0 / k as f64; k];
    let mut dirac = vec![0.0; k];
    dirac[2] = 1.0;
    assert!((entropy_weights(&dirac, &u) - (k as f64).ln()).abs() < 1e-15);
    let nu = DiscreteMeasure::new(pts, vec![0.75, 0.25]).unwrap();
    assert!((entropy(&nu, &mu).unwrap() - 0.130_812_035_941_137_1).abs() < 1e-12);
    assert_eq!(entropy_weights(&[0.5, 0.5], &[1.0, 0.0]), f64::INFINITY);
    assert!(DiscreteMeasure::new(vec![vec![0.0], vec![0.0]], vec![0.5, 0.5]).is_err());
}

#[test]
fn monotonicity_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..30 {
        let nn = 2 + trial % 2;
        let cost = if trial % 4 < 2 { CostSpec::product(nn, 1) } else { CostSpec::product(nn, 2) };
        let (inst, v) = DiscreteInstance::random_admissible(&mut rng, cost, 5).unwrap();
        let r = monotonicity_check(&inst, &v).unwrap();
        assert!(r.pass, "{trial}: {r:?}");
        // the duals are a fixed point: a second step changes nothing
        let r2 = monotonicity_check(&inst, &r.potentials).unwrap();
        assert!((r2.log_bs_phi - r2.log_bs_v).abs() < 1e-9 || r2.log_bs_phi > r2.log_bs_v);
    }
}

#[test]
fn monotonicity_rejects_inadmissible_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (inst, mut v) = DiscreteInstance::random_admissible(&mut rng, CostSpec::product(2, 1), 4).unwrap();
    for x in v[0].iter_mut() {
        *x -= 10.0;
    }
    assert!(monotonicity_check(&inst, &v).is_err());
}

#[test]
fn monotonicity_on_a_grid_tuple() {
    let g = CartesianGrid::default_for(1);
    let v = GridFunction::from_fn(&g, |x| x[0].powi(4) / 4.0 + x[0].abs());
    let t = FunctionTuple::new(vec![v.clone(), v], CostSpec::product(2, 1), vec![1.0; 2]).unwrap();
    let t = santalo_core::transforms::best_response_cycle(&t, &[ReferenceMeasure::lebesgue(1)], 2, 0.0).unwrap().0;
    let r = monotonicity_check_tuple(&t, &[ReferenceMeasure::lebesgue(1)], 16).unwrap();
    assert!(r.pass && r.log_bs_phi > r.log_bs_v + 1e-3, "{r:?}");
}

fn symmetric_instance(rng: &mut ChaCha8Rng, cost: CostSpec, pairs: usize) -> DiscreteInstance {
    let nn = cost.marginals();
    let mut s = Vec::new();
    let mut m = Vec::new();
    for _ in 0..nn {
        let mut pts = Vec::new();
        let mut ms = Vec::new();
        for _ in 0..pairs {
            let a: f64 = rng.gen_range(0.2..2.0);
            let w: f64 = rng.gen_range(0.2..1.0);
            pts.extend([vec![a], vec![-a]]);
            ms.extend([w, w]);
        }
        s.push(pts);
        m.push(ms);
    }
    DiscreteInstance::new(s, m, cost, vec![1.0; nn]).unwrap()
}

fn symmetric_nu(rng: &mut ChaCha8Rng, inst: &DiscreteInstance) -> Vec<Vec<f64>> {
    inst.supports()
        .iter()
        .map(|s| {
            let mut w = Vec::new();
            for _ in 0..s.len() / 2 {
                let x: f64 = rng.gen_range(0.0..1.0);
                w.extend([x, x]);
            }
            let t: f64 = w.iter().sum();
            w.into_iter().map(|x| x / t).collect()
        })
        .collect()
}

#[test]
fn transport_entropy_and_certificate() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for cost in [CostSpec::inner_product(1), CostSpec::product(3, 1)] {
        let inst = symmetric_instance(&mut rng, cost, 3);
        let mx = even_maximizer(&inst, 6, &mut rng).unwrap();
        assert!(mx.fixed_point_residual < 1e-12);
        let nus: Vec<_> = (0..20).map(|_| symmetric_nu(&mut rng, &inst)).collect();
        let rep = transport_entropy_check(&inst, &mx.values, &nus).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.self_trial.k_min.abs() < 1e-9 && rep.self_trial.entropy_sum < 1e-9);

        // challengers: the maximizer shifted up, and an even admissible tuple
        let nn = inst.marginals();
        let mut up = mx.values.clone();
        for x in up[0].iter_mut() {
            *x += 0.3;
        }
        let mut other: Vec<Vec<f64>> = inst.supports().iter().map(|s| s.iter().map(|p| p[0] * p[0]).collect()).collect();
        other[nn - 1] = inst.c_transform(&other, nn - 1);
        let mut low = mx.values.clone();
        for x in low[0].iter_mut() {
            *x -= 5.0;
        }
        let cert = reverse_certificate(&inst, &mx.values, &[up, other, low]).unwrap();
        assert!(cert.pass, "{cert:?}");
        assert!(cert.outcomes[2].witness.is_some());
        assert!(cert.tightest.is_some());
    }
}

#[test]
fn folded_transport_matches_the_simplex() {
    let g = CartesianGrid::new(1, 3.0, 13).unwrap();
    let v = GridFunction::from_fn(&g, |x| 0.5 * x[0] * x[0] + 0.3 * x[0].abs());
    let w = GridFunction::from_fn(&g, |x| x[0].powi(4) / 4.0);
    let leb = [ReferenceMeasure::lebesgue(1)];
    let t = FunctionTuple::new(vec![v, w.clone(), w], CostSpec::product(3, 1), vec![1.0; 3]).unwrap();
    let ft = folded_transport(&t, &leb).unwrap();
    let atoms = ft.unfolded_atoms();
    let folded_value: f64 = atoms.iter().map(|(p, m)| m * p[0][0] * p[1][0] * p[2][0]).sum();
    // the same marginals on the full symmetric support
    let kk = ft.nodes.len();
    let pts: Vec<Vec<f64>> = (1..kk).rev().map(|k| vec![-ft.nodes[k]]).chain((0..kk).map(|k| vec![ft.nodes[k]])).collect();
    let marg: Vec<Vec<f64>> = ft
        .weights
        .iter()
        .map(|w| (1..kk).rev().map(|k| w[k] / 2.0).chain((0..kk).map(|k| if k == 0 { w[0] } else { w[k] / 2.0 })).collect())
        .collect();
    let c = CostTensor::from_cost(&CostSpec::product(3, 1), &vec![pts; 3]).unwrap();
    let (_, pot) = solve_max_exact(&c, &marg).unwrap();
    assert!((folded_value - pot.primal).abs() < 1e-10, "{folded_value} vs {}", pot.primal);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_solutions_are_certified(seed in 0u64..10_000, nn in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sizes: Vec<usize> = (0..nn).map(|_| rng.gen_range(1..5)).collect();
        let len: usize = sizes.iter().product();
        let c = CostTensor::new(sizes.clone(), (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let m: Vec<Vec<f64>> = sizes
            .iter()
            .map(|&s| {
                let w: Vec<f64> = (0..s).map(|_| rng.gen_range(0.05..1.0)).collect();
                let t: f64 = w.iter().sum();
                w.into_iter().map(|x| x / t).collect()
            })
            .collect();
        let (pi, pot) = solve_max_exact(&c, &m).unwrap();
        prop_assert!(pi.marginal_error(&m) < 1e-12);
        prop_assert!(pot.gap.abs() < 1e-9);
        prop_assert!(pot.max_violation(&c) < 1e-9);
        prop_assert!(pot.slackness_residual(&c, &pi) < 1e-9);
        for fi in &pot.f[1..] {
            prop_assert!(fi.iter().copied().fold(f64::INFINITY, f64::min).abs() < 1e-15);
        }
    }
}

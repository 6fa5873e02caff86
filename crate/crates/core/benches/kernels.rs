//! Rayon pool against a single-thread pool on the heavy kernels. The
//! sequential build (`--no-default-features`) runs the same loops without
//! rayon; here a one-thread pool stands in for it so both sides share a binary.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use santalo_core::costs::CostSpec;
use santalo_core::functional::bs_value;
use santalo_core::geometry::{CartesianGrid, DirectionGrid, GridFunction, ReferenceMeasure, StarBody};
use santalo_core::transforms::{c_legendre_component, c_polar_component, BodyTuple, FunctionTuple};

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let seq = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let par = rayon::ThreadPoolBuilder::new().build().unwrap();
    vec![("one-thread", seq), ("rayon", par)]
}

fn legendre(c: &mut Criterion) {
    // non-separable components force the brute-force scan
    let g = CartesianGrid::new(2, 4.0, 41).unwrap();
    let v = GridFunction::from_fn(&g, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]) + 0.1 * (x[0] * x[1]).abs());
    let t = FunctionTuple::new(vec![v.clone(), v], CostSpec::inner_product(2), vec![1.0, 1.0]).unwrap();
    let mut group = c.benchmark_group("c_legendre 41x41 brute force");
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| c_legendre_component(&t, 0).unwrap()))
        });
    }
    group.finish();
}

fn polar(c: &mut Criterion) {
    let dirs = DirectionGrid::default_for(2);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let bodies: Vec<StarBody> = (0..3).map(|_| StarBody::random_polygon(&dirs, &mut rng, 7, 0.4, 1.6).unwrap()).collect();
    let t = BodyTuple::new(bodies, CostSpec::product(3, 2)).unwrap();
    let mut group = c.benchmark_group("c_polar triple product");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| pool.install(|| c_polar_component(&t, 2).unwrap())));
    }
    group.finish();
}

fn value(c: &mut Criterion) {
    let g = CartesianGrid::new(2, 6.0, 241).unwrap();
    let v = GridFunction::from_fn(&g, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]));
    let t = FunctionTuple::new(vec![v.clone(), v], CostSpec::inner_product(2), vec![1.0, 1.0]).unwrap();
    let m = [ReferenceMeasure::lebesgue(2)];
    let mut group = c.benchmark_group("bs_value 241x241");
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| pool.install(|| bs_value(&t, &m).unwrap())));
    }
    group.finish();
}

criterion_group!(benches, legendre, polar, value);
criterion_main!(benches);

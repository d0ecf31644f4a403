use std::sync::Arc;

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use renormlab::circlemap::{rotation_number, CircleLift, RigidRotation};
use renormlab::experiments::{julia_raster, RasterParams, Window};
use renormlab::pairs::{c0_distance, CommutingPair};
use renormlab::{BlaschkeFraction, Exec};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn raster(c: &mut Criterion) {
    let model = BlaschkeFraction::build(3).unwrap().with_theta(0.6136486389);
    let params = RasterParams::new(Window::new(-2.0, 2.0, -2.0, 2.0).unwrap(), 160, 160);
    let mut g = c.benchmark_group("julia_raster_160");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| julia_raster(black_box(&model), &params, exec).unwrap())
        });
    }
    g.finish();
}

fn distance(c: &mut Criterion) {
    let base = BlaschkeFraction::build(3).unwrap().circle_lift().unwrap();
    let a: Arc<dyn CircleLift> = Arc::new(base.with_theta(0.6136486389));
    let b: Arc<dyn CircleLift> = Arc::new(base.with_theta(0.6136486));
    let pa = CommutingPair::from_circle_map(a, 6, 100_000).unwrap();
    let pb = CommutingPair::from_circle_map(b, 6, 100_000).unwrap();
    let mut g = c.benchmark_group("c0_distance_level6");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |bch| {
            bch.iter(|| c0_distance(black_box(&pa), &pb, 1024, exec))
        });
    }
    g.finish();
}

fn batch_rotation(c: &mut Criterion) {
    let rhos: Vec<f64> = (1..=64).map(|k| (k as f64 * 0.754_877_666_246_692_8).fract()).collect();
    let mut g = c.benchmark_group("rotation_numbers_64");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| exec.map(rhos.clone(), |r| rotation_number(&RigidRotation::new(r), 1e-9, 1_000_000).rho))
        });
    }
    g.finish();
}

criterion_group!(benches, raster, distance, batch_rotation);
criterion_main!(benches);

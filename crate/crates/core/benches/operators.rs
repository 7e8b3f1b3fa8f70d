//! Sequential vs parallel timings of the hot kernels.
//!
//! "sequential" runs inside a one-thread rayon pool, "parallel" in a pool
//! sized to the machine. Building with `--no-default-features` removes
//! rayon from the library entirely; both variants then time the plain loops.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;

use proxmag::image::{ComplexImage, Shape};
use proxmag::operator::LinearOperator;
use proxmag::prox::{magnitude_lift, LiftConfig, ProxFunction};
use proxmag::regularizers::{TotalVariation, TvVariant};
use proxmag::rng;
use proxmag::sar::{FreqOperator, GeometrySpec, SceneGrid, TimeOperator};

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let all = std::thread::available_parallelism().map_or(1, |n| n.get());
    vec![
        ("sequential", rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
        ("parallel", rayon::ThreadPoolBuilder::new().num_threads(all).build().unwrap()),
    ]
}

fn sar(c: &mut Criterion) {
    let geom = GeometrySpec::default().build([0.0; 3]).unwrap();
    let grid = SceneGrid::centered([0.0; 3], 0.25, 64, 64).unwrap();
    let freq = FreqOperator::new(geom.clone(), grid).unwrap();
    let time = TimeOperator::new(geom, grid, 16).unwrap();
    let mut g = rng::seeded(1);
    let v = rng::complex_normal_vec(&mut g, grid.len());
    let d = rng::complex_normal_vec(&mut g, freq.range_len());

    let mut group = c.benchmark_group("sar-64x64");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_with_input(BenchmarkId::new("freq-forward", name), &pool, |b, p| {
            b.iter(|| p.install(|| freq.apply(&v)))
        });
        group.bench_with_input(BenchmarkId::new("freq-adjoint", name), &pool, |b, p| {
            b.iter(|| p.install(|| freq.adjoint(&d)))
        });
        group.bench_with_input(BenchmarkId::new("time-forward-x16", name), &pool, |b, p| {
            b.iter(|| p.install(|| time.apply(&v)))
        });
    }
    group.finish();
}

fn prox(c: &mut Criterion) {
    let shape = Shape::single(128, 128);
    let tv = TotalVariation::new(TvVariant::Iso2d, shape).unwrap();
    let mut g = rng::seeded(2);
    let z: Vec<Complex64> = rng::complex_normal_vec(&mut g, shape.len());
    let z = ComplexImage::new(shape, z).unwrap();
    let r = z.magnitudes();

    let mut group = c.benchmark_group("prox-128x128");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_with_input(BenchmarkId::new("tv-iso", name), &pool, |b, p| {
            b.iter(|| p.install(|| tv.prox(&r, 0.5).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("magnitude-lift-tv", name), &pool, |b, p| {
            b.iter(|| p.install(|| magnitude_lift(&tv, &z, 0.5, &LiftConfig::default()).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, sar, prox);
criterion_main!(benches);

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use convgeom_core::{
    boundary, cyclic_convolve, empirical_geometry, expected_inner, gaussian_pair,
    random_rect_scene, sample_filter_bank, Activation, GaussianPairSpec, LayerSpec, PatchGeometry,
};

fn convolution(c: &mut Criterion) {
    let mut group = c.benchmark_group("cyclic_convolve");
    for n in [16, 32, 64] {
        let (x, _) = gaussian_pair(&GaussianPairSpec {
            n,
            rho: 0.0,
            seed: 1,
        })
        .unwrap();
        let bank = sample_filter_bank(3, 1, 2.0 / 9.0, 1, 2).unwrap();
        let f = &bank.filters()[0];
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| cyclic_convolve(black_box(f), black_box(&x)).unwrap())
        });
    }
    group.finish();
}

fn exact_expectation(c: &mut Criterion) {
    let mut group = c.benchmark_group("expected_inner");
    for side in [3, 5] {
        let spec = LayerSpec::normalizing(side, Activation::Relu, PatchGeometry::Standard).unwrap();
        let (x, y) = gaussian_pair(&GaussianPairSpec {
            n: 32,
            rho: 0.5,
            seed: 3,
        })
        .unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(side), &side, |b, _| {
            b.iter(|| expected_inner(black_box(&x), black_box(&y), &spec).unwrap())
        });
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let (x, y) = gaussian_pair(&GaussianPairSpec {
        n: 16,
        rho: 0.5,
        seed: 4,
    })
    .unwrap();
    let bank = sample_filter_bank(3, 1, 2.0 / 9.0, 100, 5).unwrap();
    c.bench_function("empirical_geometry/n16_N100", |b| {
        b.iter(|| {
            empirical_geometry(black_box(&x), black_box(&y), &bank, &Activation::Relu).unwrap()
        })
    });
}

fn boundary_scan(c: &mut Criterion) {
    let (a, b) = random_rect_scene(64, 4, 4, 6).unwrap().split_pair();
    c.bench_function("boundary/n64_r2", |bench| {
        bench.iter(|| boundary(black_box(&a), black_box(&b), 2).unwrap())
    });
}

criterion_group!(
    benches,
    convolution,
    exact_expectation,
    monte_carlo,
    boundary_scan
);
criterion_main!(benches);

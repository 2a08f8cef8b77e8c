use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use maxpot_bench::{gaussian, random_field};
use maxpot_core::operators::{
    grad_majorant, maximal_potential, maximal_potential_batch, riesz_potential, spherical_average,
};
use maxpot_core::{KernelSpec, RadiusLadder, SphereQuadrature, SphereSymbol, TruncationPolicy};

fn ladder_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("maximal_potential");
    group.sample_size(10);
    for (n, res) in [(2, 64), (2, 128), (3, 24)] {
        let f = random_field(n, res);
        let spec = KernelSpec::potential(SphereSymbol::coordinate(n, 0).unwrap());
        let ladder = RadiusLadder::for_grid(f.grid());
        for (name, policy) in [
            ("overlap", TruncationPolicy::default()),
            ("center", TruncationPolicy::center_indicator()),
        ] {
            group.bench_with_input(BenchmarkId::new(format!("{n}d/{name}"), res), &f, |b, f| {
                b.iter(|| maximal_potential(f, &spec, &ladder, &policy).unwrap())
            });
        }
    }
    group.finish();
}

fn batched_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("maximal_potential_batch");
    group.sample_size(10);
    let fields: Vec<_> = (0..4).map(|_| random_field(3, 24)).collect();
    let spec = KernelSpec::potential(SphereSymbol::coordinate(3, 0).unwrap());
    let ladder = RadiusLadder::for_grid(fields[0].grid());
    let policy = TruncationPolicy::default();
    group.bench_function("3d/24/x4", |b| {
        b.iter(|| maximal_potential_batch(&fields, &spec, &ladder, &policy).unwrap())
    });
    group.finish();
}

fn riesz(c: &mut Criterion) {
    let mut group = c.benchmark_group("riesz_potential");
    group.sample_size(10);
    for res in [64, 128, 256] {
        let f = gaussian(2, res);
        group.bench_with_input(BenchmarkId::from_parameter(res), &f, |b, f| {
            b.iter(|| riesz_potential(f, &TruncationPolicy::default()).unwrap())
        });
    }
    group.finish();
}

fn spherical(c: &mut Criterion) {
    let mut group = c.benchmark_group("spherical_average");
    group.sample_size(10);
    let f = gaussian(2, 128);
    for order in [64, 256] {
        let quad = SphereQuadrature::new(2, order).unwrap();
        group.bench_with_input(BenchmarkId::new("2d/128", order), &quad, |b, q| {
            b.iter(|| spherical_average(&f, 1.0, q).unwrap())
        });
    }
    group.finish();
}

fn majorant(c: &mut Criterion) {
    let mut group = c.benchmark_group("grad_majorant");
    group.sample_size(10);
    let f = gaussian(2, 64);
    let spec = KernelSpec::potential(SphereSymbol::one(2));
    let ladder = RadiusLadder::for_grid(f.grid());
    let quad = SphereQuadrature::new(2, 64).unwrap();
    group.bench_function("2d/64", |b| {
        b.iter(|| grad_majorant(&f, &spec, &ladder, &TruncationPolicy::default(), &quad).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    ladder_sweep,
    batched_sweep,
    riesz,
    spherical,
    majorant
);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use latdeconv_bench::{grid, noisy_square};
use latdeconv_core::deconv::{estimate_cf_form, estimate_direct};
use latdeconv_core::{DeconvKernel, GnTable, NoiseModel};

fn gn_eval(c: &mut Criterion) {
    let noise = NoiseModel::laplace(1.0).unwrap();
    let table = GnTable::new(DeconvKernel::default(), noise, 0.3).unwrap();
    c.bench_function("gn_eval/quadrature", |b| b.iter(|| table.eval(black_box(1.7))));
    let tab = table.tabulated(-60.0, 60.0).unwrap();
    c.bench_function("gn_eval/table", |b| b.iter(|| tab.eval(black_box(1.7))));
}

fn estimators(c: &mut Criterion) {
    let noise = NoiseModel::laplace(1.0).unwrap();
    let kernel = DeconvKernel::default();
    let points = grid(-4.0, 4.0, 33);
    let mut group = c.benchmark_group("estimate");
    group.sample_size(10);
    for side in [16usize, 32, 48] {
        let y = noisy_square(side, noise, 7);
        let b = (y.len() as f64).powf(-0.125);
        group.bench_with_input(BenchmarkId::new("direct", side), &y, |bch, y| {
            bch.iter(|| estimate_direct(y, kernel, noise, b, &points).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("cf", side), &y, |bch, y| {
            bch.iter(|| estimate_cf_form(y, kernel, noise, b, &points).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, gn_eval, estimators);
criterion_main!(benches);

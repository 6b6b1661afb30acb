use criterion::{criterion_group, criterion_main, Criterion};
use sdgeo::dist_tensors::{dist_invariants, trace_lemma_residuals};
use sdgeo::quadrature::{stokes_check, QuadratureGrid};
use sdgeo::sampling::{random_vector_field, rng};
use sdgeo::scenarios;
use sdgeo::{einstein_tensor, riemann};
use std::hint::black_box;

fn pointwise(c: &mut Criterion) {
    let s = scenarios::einstein_s3xt2().unwrap();
    let chart = &s.pointwise.chart;
    let x = [0.3, -0.2, 0.5, 1.1, 0.4];
    c.bench_function("riemann/einstein", |b| b.iter(|| riemann(chart, black_box(&x)).unwrap()));
    c.bench_function("einstein_tensor/einstein", |b| b.iter(|| einstein_tensor(chart, black_box(&x)).unwrap()));
    c.bench_function("invariants/einstein", |b| {
        b.iter(|| dist_invariants(&s.pointwise.pair, chart, black_box(&x)).unwrap())
    });
    c.bench_function("trace_lemmas/einstein", |b| {
        b.iter(|| trace_lemma_residuals(&s.pointwise.pair, chart, black_box(&x)).unwrap())
    });
}

fn quadrature(c: &mut Criterion) {
    let s = scenarios::warped_torus(scenarios::sin_profile).unwrap();
    let sc = &s.integration;
    let grid = QuadratureGrid::new(&sc.chart, &[64, 64]).unwrap();
    let xf = random_vector_field(&mut rng(1), 2);
    let p = sc.pair.total();
    let mut group = c.benchmark_group("stokes");
    group.sample_size(20);
    group.bench_function("warped_torus_64x64", |b| b.iter(|| stokes_check(&p, &sc.chart, &xf, &grid).unwrap()));
    group.finish();
}

criterion_group!(benches, pointwise, quadrature);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use geofield::{
    assemble_system, empirical_semivariogram, fit_gaussian_wls, fit_tps, select_alpha_gcv,
    simulate_field, DriftBasis, FieldSpec, Site,
};
use geofield_bench::{bench_model, bench_observations, bench_sites};

fn variogram_benches(c: &mut Criterion) {
    let mut group = c.benchmark_group("variogram");
    for &n in &[100usize, 400] {
        let obs = bench_observations(n, 1);
        group.bench_with_input(BenchmarkId::new("empirical", n), &obs, |b, obs| {
            b.iter(|| empirical_semivariogram(black_box(obs), 15, None).unwrap())
        });
    }
    let obs = bench_observations(400, 1);
    let ev = empirical_semivariogram(&obs, 15, None).unwrap();
    group.bench_function("wls_fit", |b| {
        b.iter(|| fit_gaussian_wls(black_box(&ev)).unwrap())
    });
    group.finish();
}

fn kriging_benches(c: &mut Criterion) {
    let mut group = c.benchmark_group("kriging");
    let model = bench_model();
    for &n in &[50usize, 200] {
        let obs = bench_observations(n, 2);
        group.bench_with_input(BenchmarkId::new("assemble", n), &obs, |b, obs| {
            b.iter(|| assemble_system(black_box(obs), model, DriftBasis::Linear).unwrap())
        });
    }
    let obs = bench_observations(200, 2);
    let sys = assemble_system(&obs, model, DriftBasis::Linear).unwrap();
    group.bench_function("dual_fit_200", |b| b.iter(|| sys.fit_dual()));
    let dual = sys.fit_dual();
    let t0 = Site::new(5.0, 5.0).unwrap();
    group.bench_function("dual_predict_200", |b| {
        b.iter(|| dual.predict(black_box(&t0)))
    });
    group.bench_function("primal_predict_200", |b| {
        b.iter(|| sys.predict_primal(black_box(&t0)).unwrap())
    });
    group.finish();
}

fn spline_benches(c: &mut Criterion) {
    let mut group = c.benchmark_group("spline");
    for &n in &[50usize, 200] {
        let obs = bench_observations(n, 3);
        group.bench_with_input(BenchmarkId::new("fit", n), &obs, |b, obs| {
            b.iter(|| fit_tps(black_box(obs), 0.1).unwrap())
        });
    }
    let obs = bench_observations(60, 3);
    group.bench_function("gcv_select_60", |b| {
        b.iter(|| select_alpha_gcv(black_box(&obs), None).unwrap())
    });
    group.finish();
}

fn simulate_benches(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate");
    group.sample_size(20);
    let model = bench_model();
    for &n in &[100usize, 400] {
        let sites = bench_sites(n, 10.0, 4);
        let spec = FieldSpec {
            model,
            trend: None,
            seed: 4,
        };
        group.bench_with_input(BenchmarkId::new("field", n), &sites, |b, sites| {
            b.iter(|| simulate_field(black_box(&spec), black_box(sites)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    variogram_benches,
    kriging_benches,
    spline_benches,
    simulate_benches
);
criterion_main!(benches);

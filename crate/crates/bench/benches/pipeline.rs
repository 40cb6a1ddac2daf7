use criterion::{black_box, criterion_group, criterion_main, Criterion};
use warpiso_bench::paper_metric;
use warpiso_core::perturbation::default_ladder;
use warpiso_core::{certify, g_weight, scan_phi, volume_gap_coefficient, PerturbedSphere};

fn scans(c: &mut Criterion) {
    let spec = paper_metric(2);
    c.bench_function("scan_phi 512 points", |b| {
        b.iter(|| scan_phi(&spec, black_box((0.1, 10.0)), 512).unwrap())
    });
    c.bench_function("g_weight r=1", |b| {
        b.iter(|| g_weight(&spec, black_box(1.0)).unwrap())
    });
}

fn surfaces(c: &mut Criterion) {
    let spec = paper_metric(2);
    let ps = PerturbedSphere::new(&spec, 1.0, 0.05, true).unwrap();
    c.bench_function("surface_area eps=0.05", |b| {
        b.iter(|| ps.surface_area().unwrap())
    });
    c.bench_function("enclosed_volume_flux eps=0.05", |b| {
        b.iter(|| ps.enclosed_volume_flux().unwrap())
    });
    c.bench_function("volume_gap eps=0.05", |b| {
        b.iter(|| ps.volume_gap().unwrap())
    });
}

fn pipelines(c: &mut Criterion) {
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(20);
    for n in [1usize, 2, 3] {
        let spec = paper_metric(n);
        group.bench_function(format!("volume_gap_coefficient n={n}"), |b| {
            b.iter(|| volume_gap_coefficient(&spec, 1.0, &default_ladder(1.0)).unwrap())
        });
    }
    let spec = paper_metric(2);
    group.bench_function("certify r=1 eps=0.05", |b| {
        b.iter(|| certify(&spec, 1.0, black_box(0.05)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, scans, surfaces, pipelines);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use morrey_lab::{
    ball_plate, capacity, green_apply, morrey_norm, CoefficientSet, DiscreteMeasure,
};
use morrey_lab_bench::{disk_grid, square_grid};

fn bench_morrey_norm(c: &mut Criterion) {
    let grid = square_grid(128);
    let nu = DiscreteMeasure::lebesgue(&grid);
    c.bench_function("morrey_norm_128_depth4", |b| {
        b.iter(|| morrey_norm(black_box(&nu), 4.0 / 3.0, 4).unwrap().value)
    });
}

fn bench_green_apply(c: &mut Criterion) {
    let grid = disk_grid(64);
    let coeffs = CoefficientSet::laplace(&grid);
    let nu = DiscreteMeasure::lebesgue(&grid);
    c.bench_function("green_apply_disk_64", |b| {
        b.iter(|| green_apply(black_box(&grid), &coeffs, &nu).unwrap().1.iterations)
    });
}

fn bench_capacity(c: &mut Criterion) {
    let grid = disk_grid(64);
    let plate = ball_plate(&grid, [0.0, 0.0], 0.5);
    c.bench_function("condenser_capacity_64", |b| {
        b.iter(|| capacity(black_box(&grid), &plate).unwrap().value)
    });
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(10);
    targets = bench_morrey_norm, bench_green_apply, bench_capacity
}
criterion_main!(kernels);

use std::hint::black_box;

use annulus::closed_form::solve_combined_energy;
use annulus::competitors::{competitor_sweep, Functional, SweepOptions};
use annulus::energy::grid_energy_report;
use annulus::ode::Dopri5;
use annulus::ode_shooting::{phi_curve, shoot, ShootOptions};
use annulus::{radial_lift_on, AnnulusPair, Weights};
use criterion::{criterion_group, criterion_main, Criterion};

fn closed_form(c: &mut Criterion) {
    let pair = AnnulusPair::new(2.0, 3.0).unwrap();
    c.bench_function("solve_combined_energy/257", |b| {
        b.iter(|| solve_combined_energy(black_box(pair), 1.0, 257).unwrap())
    });
}

fn shooting(c: &mut Criterion) {
    let pair = AnnulusPair::new(2.0, 3.0).unwrap();
    let opts = ShootOptions::default();
    c.bench_function("shoot/r2_R3_c0.9", |b| {
        b.iter(|| shoot(black_box(pair), 0.9, 1.0, &opts).unwrap())
    });
    c.bench_function("phi_curve/q3", |b| {
        b.iter(|| {
            phi_curve(
                black_box(3.0),
                0.5,
                1.0,
                (1.0, 50.0),
                400,
                &Dopri5::default(),
            )
            .unwrap()
        })
    });
}

fn grid(c: &mut Criterion) {
    let sol = solve_combined_energy(AnnulusPair::new(2.0, 3.0).unwrap(), 1.0, 257).unwrap();
    let map = radial_lift_on(&sol.exact(), 256, 256).unwrap();
    let w = Weights::unit();
    c.bench_function("grid_energy_report/256x256", |b| {
        b.iter(|| grid_energy_report(black_box(&map), &w).unwrap())
    });
    let opts = SweepOptions {
        n: 8,
        seed: 7,
        n_t: 65,
        n_theta: 64,
        ..SweepOptions::default()
    };
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    group.bench_function("combined_energy/8x65x64", |b| {
        b.iter(|| {
            competitor_sweep(
                &sol.exact(),
                &w,
                Functional::CombinedEnergy,
                black_box(&opts),
            )
            .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, closed_form, shooting, grid);
criterion_main!(benches);

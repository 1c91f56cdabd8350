use std::f64::consts::PI;
use std::hint::black_box;
use std::time::Duration;

use casimir_core::field::IdealForceLaw;
use casimir_core::lifshitz::energy_per_area_t0;
use casimir_core::mechanics::{cantilever_from_hz, simulate, SimulationOptions};
use casimir_core::protocol::{psd, WelchSpec};
use casimir_core::spectral::eigenvalues;
use casimir_core::{
    build_field, DielectricModel, EffectiveHamiltonian, ForceModel, GridSpec, MirrorStack, ModulationSchedule,
    QuadratureSpec, SystemConfig, ThermalSetting,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn gold_model() -> ForceModel {
    ForceModel {
        mirror1: MirrorStack::bulk(DielectricModel::gold()),
        mirror2: MirrorStack::bulk(DielectricModel::gold()),
        sphere_radius: 34.55e-6,
        thermal: ThermalSetting::room(),
        quadrature: QuadratureSpec::default(),
    }
}

fn system() -> SystemConfig {
    SystemConfig {
        cantilever1: cantilever_from_hz(2.09e-10, 4826.0, 2.65).unwrap(),
        cantilever2: cantilever_from_hz(1.05e-10, 5582.0, 2.68).unwrap(),
        sphere_radius: 34.55e-6,
        equilibrium_gap: 76e-9,
        temperature: 300.0,
        extra_damping_2: 2.0 * PI * 11.14,
    }
}

fn bench_lifshitz(c: &mut Criterion) {
    let gold = MirrorStack::bulk(DielectricModel::gold());
    let quad = QuadratureSpec::default();
    let mut group = c.benchmark_group("lifshitz/energy_t0");
    group.sample_size(10);
    for x in [50e-9, 200e-9, 800e-9] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{:.0}nm", x * 1e9)), &x, |b, &x| {
            b.iter(|| energy_per_area_t0(&gold, &gold, black_box(x), &quad).unwrap())
        });
    }
    group.finish();
}

fn bench_field(c: &mut Criterion) {
    let model = gold_model();
    let grid = GridSpec { x_min: 30e-9, x_max: 1000e-9, points: 200 };
    let mut group = c.benchmark_group("field");
    group.sample_size(10).measurement_time(Duration::from_secs(30));
    group.bench_function("build_200_nodes", |b| b.iter(|| build_field(&model, black_box(&grid)).unwrap()));
    group.finish();
}

fn bench_dynamics(c: &mut Criterion) {
    let config = system();
    let law = IdealForceLaw { sphere_radius: config.sphere_radius };
    let schedule = ModulationSchedule::constant(735.0, 5e-9, 0.0).unwrap();
    let options = SimulationOptions::new(0.01, 1e-6);
    let mut group = c.benchmark_group("dynamics");
    group.sample_size(10);
    group.bench_function("rk4_10ms_1us", |b| {
        b.iter(|| simulate(&config, &law, black_box(&schedule), &[], &options).unwrap())
    });
    group.finish();
}

fn bench_spectral(c: &mut Criterion) {
    let h = EffectiveHamiltonian {
        gamma1: 2.0 * PI * 2.65,
        gamma2: 2.0 * PI * 13.82,
        coupling: 40.0,
        detuning: 3.0,
    };
    c.bench_function("spectral/eigenvalues", |b| b.iter(|| eigenvalues(black_box(&h))));
}

fn bench_psd(c: &mut Criterion) {
    let dt = 1e-5;
    let signal: Vec<f64> = (0..1 << 16).map(|i| (2.0 * PI * 5582.0 * i as f64 * dt).sin()).collect();
    let spec = WelchSpec { segment_len: 1 << 12, overlap: 0.5 };
    c.bench_function("psd/welch_65536", |b| b.iter(|| psd(black_box(&signal), dt, &spec).unwrap()));
}

criterion_group!(benches, bench_lifshitz, bench_field, bench_dynamics, bench_spectral, bench_psd);
criterion_main!(benches);

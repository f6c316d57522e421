use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use omsim_bench::{branch_params, mass_params, spectrum_params};
use omsim_core::effective_mass;
use omsim_core::linear_response::{solve_sidebands_direct, transmission_closed_form};
use omsim_core::multistability::{quintic_coefficients, solve_quintic};
use omsim_core::steady_state::{enumerate_steady_states, solve_fixed_point, DetuningMode};

fn quintic(c: &mut Criterion) {
    let p = branch_params();
    c.bench_function("quintic_coefficients_and_roots", |b| {
        b.iter(|| {
            let coeffs = quintic_coefficients(black_box(&p));
            solve_quintic(&coeffs).unwrap()
        })
    });
}

fn steady(c: &mut Criterion) {
    let p = spectrum_params();
    c.bench_function("steady_picard_locked", |b| {
        b.iter(|| solve_fixed_point(black_box(&p), DetuningMode::ThetaLocked, 0.0, 0.0, 1e-9, 20_000))
    });
    let p2 = branch_params();
    c.bench_function("steady_enumerate_locked", |b| {
        b.iter(|| enumerate_steady_states(black_box(&p2), DetuningMode::ThetaLocked, 64, 1e-9))
    });
}

fn sidebands(c: &mut Criterion) {
    let p = spectrum_params();
    let state = solve_fixed_point(&p, DetuningMode::ThetaLocked, 0.0, 0.0, 1e-9, 20_000).unwrap();
    let omega = 1.003 * p.omega1;
    c.bench_function("sideband_direct_solve", |b| {
        b.iter(|| solve_sidebands_direct(black_box(&p), black_box(&state), black_box(omega)))
    });
    c.bench_function("transmission_closed_form", |b| {
        b.iter(|| transmission_closed_form(black_box(&p), black_box(&state), black_box(omega)))
    });
}

fn masses(c: &mut Criterion) {
    let p = mass_params();
    c.bench_function("effective_mass_report", |b| {
        b.iter(|| effective_mass::report(black_box(&p)))
    });
}

criterion_group!(benches, quintic, steady, sidebands, masses);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use doublon_core::cascade::{build_liouvillian, CascadeConfig};
use doublon_core::effective::{decay_and_chirality, effective_coupling};
use doublon_core::emitter::GiantEmitterPair;
use doublon_core::lattice::{
    propagate, DriveSample, LatticeHamiltonian, PropagateOptions, Schedule, TwoExcitationState,
};
use doublon_core::spectrum::{doublon_energy, WaveguideParams};
use num_complex::Complex64 as C64;

fn bench_spectrum(c: &mut Criterion) {
    let params = WaveguideParams::new(600, 1.0, 4.0);
    c.bench_function("doublon_energy_grid", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for k in params.momentum_grid() {
                acc += doublon_energy(black_box(k), &params);
            }
            acc
        })
    });
}

fn bench_effective(c: &mut Criterion) {
    let params = WaveguideParams::new(600, 1.0, 4.0);
    let pair = GiantEmitterPair::colocated(300, 1, 1.5707963, 1.5707963, 0.1, -2.55);
    c.bench_function("effective_coupling", |b| {
        b.iter(|| effective_coupling(black_box(1.317), &pair, &params).unwrap())
    });
    c.bench_function("decay_and_chirality", |b| {
        b.iter(|| decay_and_chirality(&pair, &params).unwrap())
    });
}

fn bench_lattice(c: &mut Criterion) {
    let params = WaveguideParams::new(400, 1.0, 4.0);
    let pair = GiantEmitterPair::colocated(200, 1, 1.5707963, 1.5707963, 0.1, -2.55);
    let ham = LatticeHamiltonian::new(params, &[pair]).unwrap();
    let basis = ham.basis().clone();
    let schedule = Schedule::static_drives(vec![(0.1, -2.55); 2], -5.1);
    let mut sample = DriveSample::empty();
    schedule.sample_into(0.0, &mut sample);
    let state = TwoExcitationState::excited_pair(&basis, 0);
    let mut out = vec![C64::new(0.0, 0.0); basis.dim()];
    c.bench_function("hamiltonian_apply_n400", |b| {
        b.iter(|| ham.apply(&sample, black_box(&state.amplitudes), &mut out))
    });
    c.bench_function("propagate_unit_time_n400", |b| {
        b.iter_batched(
            || TwoExcitationState::excited_pair(&basis, 0),
            |mut s| {
                let opts = PropagateOptions {
                    dt: 0.02,
                    sample_interval: 1.0,
                    ..Default::default()
                };
                propagate(&ham, &mut s, &schedule, 1.0, &opts).unwrap()
            },
            BatchSize::LargeInput,
        )
    });
}

fn bench_cascade(c: &mut Criterion) {
    let config = CascadeConfig::new(1.0, 0.1).with_drive(0.5, 0.0);
    c.bench_function("build_liouvillian", |b| {
        b.iter(|| build_liouvillian(black_box(&config)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_spectrum,
    bench_effective,
    bench_lattice,
    bench_cascade
);
criterion_main!(benches);

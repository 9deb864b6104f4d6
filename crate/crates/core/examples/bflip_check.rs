// Temporary: receiver characterization in the flipped frame.
use doublon_core::emitter::GiantEmitterPair;
use doublon_core::lattice::{
    directional_split, fit_decay_rate, propagate, LatticeHamiltonian, PropagateOptions, Schedule,
    TwoExcitationState,
};
use doublon_core::protocols::mirror_absorber_for;
use doublon_core::spectrum::WaveguideParams;
use std::f64::consts::FRAC_PI_2;

fn main() {
    let params = WaveguideParams::new(600, 1.0, 6.0);
    let g = 0.22;
    let pair_a = GiantEmitterPair::colocated(150, 1, FRAC_PI_2, FRAC_PI_2, g, -3.465);
    let pair_b = mirror_absorber_for(&pair_a, 330);

    // Sender rate in the normal frame, for reference.
    let chi_a = doublon_core::effective::decay_and_chirality(&pair_a, &params).unwrap();
    println!(
        "A (normal frame): Gamma = {:.5e}, C = {:.6}",
        chi_a.gamma_plus + chi_a.gamma_minus,
        chi_a.chiral_factor
    );

    // Receiver in the flipped frame: lattice decay fit and direction.
    let flipped = params.sign_flipped();
    let chi_b = doublon_core::effective::decay_and_chirality(&pair_b, &flipped).unwrap();
    println!(
        "B (flipped frame, analytic): Gamma+ = {:.5e}, Gamma- = {:.5e}, C = {:.6}, K_r = {:.4}",
        chi_b.gamma_plus, chi_b.gamma_minus, chi_b.chiral_factor, chi_b.resonant_k
    );

    let ham = LatticeHamiltonian::new(flipped.clone(), &[pair_b]).unwrap();
    let basis = ham.basis().clone();
    let stark = doublon_core::effective::stark_shift(&pair_b.emitter_1, &flipped, g);
    let shift = 2.0 * (pair_b.mean_detuning() + stark);
    let schedule = Schedule::static_drives(vec![(g, pair_b.mean_detuning()); 2], shift);
    let mut state = TwoExcitationState::excited_pair(&basis, 0);
    let opts = PropagateOptions {
        dt: 0.02,
        sample_interval: 1.0,
        ..Default::default()
    };
    let trace = propagate(&ham, &mut state, &schedule, 300.0, &opts).unwrap();
    let fit = fit_decay_rate(&trace.times, &trace.pair_populations[0], 30.0, 280.0).unwrap();
    let (l, r, c_num) = directional_split(&state, &basis, pair_b.center());
    println!(
        "B lattice (flipped): fitted Gamma = {:.5e} (vs A {:.5e}), P_L = {l:.4}, P_R = {r:.4}, C_num = {c_num:.4}",
        fit.rate,
        chi_a.gamma_plus + chi_a.gamma_minus
    );
    println!(
        "B final population {:.4}, single-photon max {:.4}",
        trace.pair_populations[0].last().unwrap(),
        trace.single_photon.iter().cloned().fold(0.0, f64::max)
    );
}

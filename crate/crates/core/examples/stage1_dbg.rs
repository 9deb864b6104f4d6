// Temporary: stage-1 front tracking diagnostic.
use doublon_core::emitter::GiantEmitterPair;
use doublon_core::lattice::{
    propagate, FieldSnapshot, LatticeHamiltonian, PropagateOptions, Schedule, TwoExcitationState,
};
use doublon_core::protocols::mirror_absorber_for;
use doublon_core::spectrum::WaveguideParams;
use std::f64::consts::FRAC_PI_2;

fn main() {
    let params = WaveguideParams::new(600, 1.0, 6.0);
    let g = 0.22;
    let pair_a = GiantEmitterPair::colocated(150, 1, FRAC_PI_2, FRAC_PI_2, g, -3.465);
    let pair_b = mirror_absorber_for(&pair_a, 370);
    let ham = LatticeHamiltonian::new(params.clone(), &[pair_a, pair_b]).unwrap();
    let basis = ham.basis().clone();
    let stark = doublon_core::effective::stark_shift(&pair_a.emitter_1, &params, g);
    let shift = 2.0 * (-3.465 + stark);
    let schedule = Schedule::static_drives(
        vec![(g, -3.465), (g, -3.465), (g, 3.465), (g, 3.465)],
        shift,
    );
    let mut state = TwoExcitationState::excited_pair(&basis, 0);
    let opts = PropagateOptions {
        dt: 0.01,
        sample_interval: 10.0,
        ..Default::default()
    };
    for _seg in 0..12 {
        propagate(&ham, &mut state, &schedule, 10.0, &opts).unwrap();
        let snap = FieldSnapshot::from_state(&state, &basis);
        let mass = snap.total_mass();
        let n = snap.n_sites;
        let mut bins = vec![0.0; 2 * n - 1];
        for (xc, _, d) in snap.iter_xc_rd() {
            bins[(2.0 * xc) as usize] += d;
        }
        let total: f64 = bins.iter().sum();
        let mut acc = 0.0;
        let mut hi = 0.0;
        for (i, m) in bins.iter().enumerate().rev() {
            acc += m;
            if acc >= 0.01 * total {
                hi = i as f64 / 2.0;
                break;
            }
        }
        println!(
            "t = {:>5.1}: pa = {:.4}, pb = {:.4e}, pp mass = {:.4}, single = {:.4}, front(1%) = {hi:.1}",
            state.time,
            state.pair_population(&basis, 0),
            state.pair_population(&basis, 1),
            mass,
            state.single_photon_population(&basis),
        );
    }
}

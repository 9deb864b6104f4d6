// Temporary: desk-scale emission run against the analytic rate.
use doublon_core::effective::decay_and_chirality;
use doublon_core::emitter::GiantEmitterPair;
use doublon_core::lattice::{
    fit_decay_rate, pair_correlation, propagate, EmitterDrive, LatticeHamiltonian,
    PropagateOptions, Schedule, TwoExcitationState,
};
use doublon_core::spectrum::WaveguideParams;
use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

fn main() {
    let n = 600;
    let params = WaveguideParams::new(n, 1.0, 4.0);
    let pair = GiantEmitterPair::colocated(300, 1, FRAC_PI_2, FRAC_PI_2, 0.1, -2.55);
    let analytic = decay_and_chirality(&pair, &params).unwrap();
    let gamma = analytic.gamma_plus + analytic.gamma_minus;
    println!(
        "analytic: K_r = {:.4}, C = {:.6}, Gamma = {:.6e}",
        analytic.resonant_k, analytic.chiral_factor, gamma,
    );
    let stark = doublon_core::effective::stark_shift(&pair.emitter_1, &params, 0.1);
    let shifted_pair = GiantEmitterPair::colocated(300, 1, FRAC_PI_2, FRAC_PI_2, 0.1, -2.55 + stark);
    let gs = decay_and_chirality(&shifted_pair, &params).unwrap();
    println!(
        "stark per emitter = {stark:.5}; Gamma at stark-shifted detuning = {:.6e} ({:+.2}%)",
        gs.gamma_plus + gs.gamma_minus,
        100.0 * (gs.gamma_plus + gs.gamma_minus - gamma) / gamma
    );

    for (label, ramp) in [("quench", 0.0), ("ramp 25", 25.0)] {
        let ham = LatticeHamiltonian::new(params.clone(), &[pair]).unwrap();
        let basis = ham.basis().clone();
        let mut state = TwoExcitationState::excited_pair(&basis, 0);
        let schedule = Schedule {
            drives: vec![
                EmitterDrive::Ramped {
                    coupling: 0.1,
                    detuning: -2.55,
                    ramp_time: ramp,
                    stark_per_g2: 0.0,
                };
                2
            ],
            frame_shift: -5.1,
            flip: None,
            bond_cut: None,
        };
        let t_span = 390.0;
        let opts = PropagateOptions {
            dt: 0.02,
            sample_interval: 1.0,
            snapshot_times: vec![t_span],
            split_center: Some(pair.center()),
            ..Default::default()
        };
        let start = Instant::now();
        let trace = propagate(&ham, &mut state, &schedule, t_span, &opts).unwrap();
        println!(
            "--- {label}: {:.1} s ({:.3} ms/step), norm {:.12}",
            start.elapsed().as_secs_f64(),
            start.elapsed().as_secs_f64() * 1000.0 / (t_span / opts.dt),
            trace.norm.last().unwrap()
        );
        for (w0, w1) in [(40.0, 316.0), (60.0, 180.0), (180.0, 316.0), (250.0, 380.0)] {
            let fit = fit_decay_rate(&trace.times, &trace.pair_populations[0], w0, w1).unwrap();
            println!(
                "  fit [{w0:.0},{w1:.0}]: {:.5e} ({:+.2}%) res {:.1e}",
                fit.rate,
                100.0 * (fit.rate - gamma) / gamma,
                fit.residual
            );
        }
        let max_single = trace.single_photon.iter().fold(0.0f64, |m, &v| m.max(v));
        let late_single = trace.single_photon[60..]
            .iter()
            .fold(0.0f64, |m, &v| m.max(v));
        println!("  single-photon: max {:.4}, max after t=60: {:.4}", max_single, late_single);
        let (l, r, c_num) =
            doublon_core::lattice::directional_split(&state, &basis, pair.center());
        let g2 = pair_correlation(&state, &basis, 8).unwrap();
        println!(
            "  P_L {l:.5} P_R {r:.5} C_num {c_num:.5}; |c_e|^2 end {:.4}; G2 ratio {:.0}",
            trace.pair_populations[0].last().unwrap(),
            g2[0] / g2[5]
        );
    }
}

// Temporary: mirror protocol calibration at desk scale.
use doublon_core::effective::decay_and_chirality;
use doublon_core::emitter::GiantEmitterPair;
use doublon_core::protocols::{mirror_absorber_for, run_mirror, MirrorOptions};
use doublon_core::spectrum::WaveguideParams;
use std::time::Instant;

fn main() {
    let params = WaveguideParams::new(600, 1.0, 6.0);
    let g = 0.19;
    let pair_a = GiantEmitterPair::colocated(60, 1, std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2, g, -3.465);
    let mut probe = pair_a;
    probe.emitter_1.coupling = g;
    probe.emitter_2.coupling = g;
    let chi = decay_and_chirality(&probe, &params).unwrap();
    println!(
        "sender: K_r = {:.4}, C = {:.5}, Gamma = {:.4e}, v_g = {:.4}, warn: {:?}",
        chi.resonant_k,
        chi.chiral_factor,
        chi.gamma_plus + chi.gamma_minus,
        doublon_core::spectrum::group_velocity(chi.resonant_k, &params).abs(),
        chi.markov_warning
    );
    let pair_b = mirror_absorber_for(&pair_a, 280);
    let options = MirrorOptions {
        coupling: g,
        dt: 0.02,
        source_on_ramp: 5.0,
        snapshot_interval: Some(150.0),
        ..Default::default()
    };
    let start = Instant::now();
    match run_mirror(&params, &pair_a, &pair_b, &options) {
        Ok(report) => {
            println!("took {:.0} s", start.elapsed().as_secs_f64());
            println!(
                "efficiency = {:.4} at t = {:.1}; stranded = {:.4e}",
                report.efficiency, report.efficiency_time, report.sender_stranded
            );
            println!(
                "sequence: t1 = {:.1}, n_b = {}, t2 = {:.1}, t_f = {:.1}",
                report.sequence.t_1, report.sequence.n_b, report.sequence.t_2, report.sequence.t_f
            );
            println!(
                "spectral identity err = {:.2e}; shape correlation = {:.5}",
                report.spectral_identity_error, report.shape_correlation
            );
            println!("warnings: {:?}", report.warnings);
            // Mass budget at the peak.
            let peak_idx = report
                .times
                .iter()
                .position(|&t| t >= report.efficiency_time)
                .unwrap_or(report.times.len() - 1);
            println!(
                "at peak: pa = {:.4e}, pb = {:.4}, single = {:.4}, two-photon = {:.4}",
                report.sender_population[peak_idx],
                report.receiver_population[peak_idx],
                report.single_photon[peak_idx],
                report.two_photon[peak_idx]
            );
            for snap in &report.snapshots {
                let (left_of_cut, _) = snap.split_mass(report.sequence.n_b as f64 + 0.5);
                let (_, beyond_b) = snap.split_mass(333.0);
                println!(
                    "  t = {:>6.0}: pp mass = {:.4}, left of cut = {:.4}, beyond receiver = {:.4}",
                    snap.t,
                    snap.total_mass(),
                    left_of_cut,
                    beyond_b
                );
            }
            // Control: no flip.
            let control = MirrorOptions {
                enable_flip: false,
                ..options
            };
            let r2 = run_mirror(&params, &pair_a, &pair_b, &control).unwrap();
            println!("control (no flip) efficiency = {:.4}", r2.efficiency);
        }
        Err(e) => println!("mirror failed: {e}"),
    }
}

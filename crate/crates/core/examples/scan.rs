// Temporary diagnostic scan used during development.
use doublon_core::effective::{
    channel_amplitude, chirality_large_d, decay_and_chirality, effective_coupling,
};
use doublon_core::emitter::GiantEmitterPair;
use doublon_core::spectrum::{resonant_wavevector, WaveguideParams};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

fn main() {
    let p = WaveguideParams::new(600, 1.0, 4.0);

    let pair55 = GiantEmitterPair::colocated(300, 1, FRAC_PI_2, FRAC_PI_2, 0.1, -2.55);
    let res55 = decay_and_chirality(&pair55, &p).unwrap();
    println!(
        "at -2.55 exactly: K_r = {:.6}, C = {:.8}, Gamma_tot = {:.6e}",
        res55.resonant_k,
        res55.chiral_factor,
        res55.gamma_plus + res55.gamma_minus,
    );

    // K_r = pi/2 working point (E = -sqrt(24))
    let det_half = -0.5 * (16.0f64 + 8.0).sqrt();
    let kr2 = resonant_wavevector(det_half, &p).unwrap();
    println!(
        "K_r at det {:.5} = {:.6} (pi/2 = {:.6})",
        det_half, kr2, FRAC_PI_2
    );
    for d in [6usize, 9] {
        let mut max_dc = 0.0f64;
        let mut max_rate = 0.0f64;
        for i in 0..16 {
            for j in 0..16 {
                let phi1 = -PI + 2.0 * PI * (i as f64 + 0.5) / 16.0;
                let phi2 = -PI + 2.0 * PI * (j as f64 + 0.5) / 16.0;
                let (scale, c) = chirality_large_d(phi1, phi2, kr2, d);
                if scale < 0.4 {
                    continue;
                }
                let pair = GiantEmitterPair::colocated(280, d, phi1, phi2, 0.1, det_half);
                let full = decay_and_chirality(&pair, &p).unwrap();
                max_dc = max_dc.max((full.chiral_factor - c).abs());
                let a0 = channel_amplitude(0, kr2, &p, det_half).unwrap();
                let vg = doublon_core::spectrum::group_velocity(kr2, &p).abs();
                let pref = 0.1f64.powi(4) * a0 * a0 / vg;
                let measured = (full.gamma_plus + full.gamma_minus) / pref;
                max_rate = max_rate.max((measured - scale).abs() / scale);
            }
        }
        let pair = GiantEmitterPair::colocated(280, d, FRAC_PI_3, FRAC_PI_3, 0.1, det_half);
        let full = decay_and_chirality(&pair, &p).unwrap();
        let (_, c) = chirality_large_d(FRAC_PI_3, FRAC_PI_3, kr2, d);
        println!(
            "Kr=pi/2 d={d}: floored grid max dC = {:.4}, max rate rel = {:.4}; (pi/3,pi/3): full {:.5} vs closed {:.5}",
            max_dc, max_rate, full.chiral_factor, c
        );
    }

    // Same with the rate floor at the -2.55 working point.
    let kr = res55.resonant_k;
    for d in [6usize, 9] {
        let mut max_dc = 0.0f64;
        for i in 0..16 {
            for j in 0..16 {
                let phi1 = -PI + 2.0 * PI * (i as f64 + 0.5) / 16.0;
                let phi2 = -PI + 2.0 * PI * (j as f64 + 0.5) / 16.0;
                let (scale, c) = chirality_large_d(phi1, phi2, kr, d);
                if scale < 0.4 {
                    continue;
                }
                let pair = GiantEmitterPair::colocated(280, d, phi1, phi2, 0.1, -2.55);
                let full = decay_and_chirality(&pair, &p).unwrap();
                max_dc = max_dc.max((full.chiral_factor - c).abs());
            }
        }
        println!("det=-2.55 d={d}: floored grid max dC = {:.4}", max_dc);
    }

    // N-dependence of the optimal detuning.
    for n in [600usize, 1200, 3000] {
        let pn = WaveguideParams::new(n, 1.0, 4.0);
        let f = |det: f64| {
            let pair = GiantEmitterPair::colocated(n / 2, 1, FRAC_PI_2, FRAC_PI_2, 0.1, det);
            let kr = resonant_wavevector(det, &pn).unwrap();
            effective_coupling(-kr, &pair, &pn).unwrap().norm()
        };
        let (mut lo, mut hi) = (-2.60f64, -2.50f64);
        for _ in 0..60 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if f(m1) < f(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        println!("N = {n}: optimal detuning = {:.6}", 0.5 * (lo + hi));
    }
}

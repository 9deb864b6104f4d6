// Temporary: transfer protocol calibration at desk scale.
use doublon_core::emitter::GiantEmitterPair;
use doublon_core::protocols::{run_transfer, ShapingConvention, TransferOptions};
use doublon_core::spectrum::WaveguideParams;
use std::f64::consts::FRAC_PI_2;
use std::io::Write;
use std::time::Instant;

fn main() {
    let params = WaveguideParams::new(600, 1.0, 4.0);
    let pair_a = GiantEmitterPair::colocated(150, 1, FRAC_PI_2, FRAC_PI_2, 0.13, -2.55);
    let pair_b = GiantEmitterPair::colocated(450, 1, FRAC_PI_2, FRAC_PI_2, 0.13, -2.55);
    for shaping in [ShapingConvention::Supplement, ShapingConvention::MainText] {
        let options = TransferOptions {
            g0: 0.13,
            shaping,
            dt: 0.02,
            ..Default::default()
        };
        let start = Instant::now();
        match run_transfer(&params, &pair_a, &pair_b, &options) {
            Ok(r) => {
                println!(
                    "{}: eff = {:.4}, sender_final = {:.2e}, photon_final = {:.4}, leaked = {:.2e}",
                    shaping.label(),
                    r.efficiency,
                    r.sender_final,
                    r.photon_final,
                    r.leaked_final
                );
                println!(
                    "  residual: retarded max = {:.4}, instant max = {:.4}; receiver_initial = {:.2e}",
                    r.max_retarded_residual, r.max_instant_residual, r.receiver_initial
                );
                println!(
                    "  gamma0 = {:.4e}, tau_d = {:.1}, window = [{:.1}, {:.1}], took {:.0} s",
                    r.gamma0,
                    r.tau_d,
                    r.t_i,
                    r.t_f,
                    start.elapsed().as_secs_f64()
                );
                println!("  warnings: {:?}", r.warnings);
            }
            Err(e) => println!("{}: failed: {e}", shaping.label()),
        }
        std::io::stdout().flush().unwrap();
    }
}

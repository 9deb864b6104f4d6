use doublon_core::cascade::*;
fn main() {
    let config = CascadeConfig::new(0.5, 0.2);
    let rho = CascadeDensityMatrix::pure(EEGG);
    let t_grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.25).collect();
    let trace = evolve_master(&rho, &config, &t_grid).unwrap();
    for (t, p) in trace.times.iter().zip(&trace.upstream).step_by(4) {
        println!("t={t:.3} p={p:.12} want={:.12} diff={:.3e}", (-0.7*t).exp(), p - (-0.7*t).exp());
    }
    let gamma = 0.6;
    let config = CascadeConfig::new(gamma, 0.0).with_drive(gamma, 0.0);
    let rho = CascadeDensityMatrix::pure(GGGG);
    let t_grid: Vec<f64> = (0..=30).map(|i| i as f64 * 2.0).collect();
    let trace = evolve_master(&rho, &config, &t_grid).unwrap();
    for (t, f) in trace.times.iter().zip(&trace.fidelity).step_by(6) {
        println!("t={t:.2} F={f:.10}");
    }
}

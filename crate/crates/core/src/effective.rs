//! Interference-channel description of supercorrelated emission.
//!
//! After adiabatic elimination of the single-photon intermediate states,
//! the emitter pair couples to doublon mode `K` through an effective
//! amplitude `F_K` built from four interference channels, one per choice of
//! coupling point on each emitter. Each channel carries the local coupling
//! phases and a propagation phase set by the center of mass of the emitted
//! pair; their vector sum controls the directional decay rates
//! `Gamma_+- = (g1 g2)^2 |F_{+-K_r}|^2 / (v_g J^2)` and the chiral factor
//! `C = (Gamma_+ - Gamma_-) / (Gamma_+ + Gamma_-)`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::emitter::{GiantEmitter, GiantEmitterPair};
use crate::error::Error;
use crate::numerics::log_linear_rate;
use crate::spectrum::{
    doublon_energy, group_velocity, relative_decay_ratio, resonant_wavevector,
    wavefunction_normalization, WaveguideParams,
};
use crate::Result;

/// Single-photon mode energy `omega_k = -2 J cos k`.
#[inline]
fn mode_energy(k: f64, params: &WaveguideParams) -> f64 {
    -2.0 * params.hopping * k.cos()
}

/// Contribution of single-photon mode `k` to exciting doublon mode `K`:
/// the inner sum over the relative coordinate is closed in terms of the
/// geometric series of the bound-state wavefunction, so the kernel is real.
///
/// Fails with `ResonantSinglePhoton` when `omega_k` hits the emitter
/// transition, which would invalidate adiabatic elimination.
pub fn mode_kernel(k: f64, k_com: f64, params: &WaveguideParams, detuning: f64) -> Result<f64> {
    let delta_k = mode_energy(k, params) - detuning;
    let threshold = 1e-9 * params.hopping.abs();
    if delta_k.abs() < threshold {
        return Err(Error::ResonantSinglePhoton {
            delta: delta_k.abs(),
            threshold,
        });
    }
    let u0 = wavefunction_normalization(k_com, params);
    Ok(2.0 * 2.0f64.sqrt() * params.hopping * u0 * bound_state_sum(k - 0.5 * k_com, k_com, params)
        / (params.num_sites as f64 * delta_k))
}

/// `sum_m e^{-i kappa m} u_K(m) / u_0 = (1 - rho^2)/(1 - 2 rho cos kappa + rho^2)`.
#[inline]
fn bound_state_sum(kappa: f64, k_com: f64, params: &WaveguideParams) -> f64 {
    let rho = relative_decay_ratio(k_com, params);
    (1.0 - rho * rho) / (1.0 - 2.0 * rho * kappa.cos() + rho * rho)
}

/// Kernel over the full momentum grid, with the grid of `delta_k` reused by
/// the channel sums. Returns `(k_j, L_j)` pairs.
fn kernel_grid(k_com: f64, params: &WaveguideParams, detuning: f64) -> Result<Vec<(f64, f64)>> {
    params
        .momentum_grid()
        .into_iter()
        .map(|k| mode_kernel(k, k_com, params, detuning).map(|l| (k, l)))
        .collect()
}

/// Channel amplitude `A(r_d) = sum_k L_{k,K} cos[(k - K/2) r_d]` for two
/// coupling points separated by `r_d` sites.
///
/// Decays on the scale of the bound-state length `L_u(K)`: widely separated
/// points cannot jointly seed a tightly bound pair.
pub fn channel_amplitude(
    r_d: i64,
    k_com: f64,
    params: &WaveguideParams,
    detuning: f64,
) -> Result<f64> {
    let grid = kernel_grid(k_com, params, detuning)?;
    Ok(amplitude_from_grid(&grid, r_d, k_com))
}

#[inline]
fn amplitude_from_grid(grid: &[(f64, f64)], r_d: i64, k_com: f64) -> f64 {
    grid.iter()
        .map(|&(k, l)| l * ((k - 0.5 * k_com) * r_d as f64).cos())
        .sum()
}

/// Which coupling point of an emitter a channel uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Leg {
    Left,
    Right,
}

impl Leg {
    pub const BOTH: [Leg; 2] = [Leg::Left, Leg::Right];

    fn select(self, e: &GiantEmitter) -> (usize, f64) {
        match self {
            Leg::Left => (e.left_point, e.left_phase),
            Leg::Right => (e.right_point, e.right_phase),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Leg::Left => "l",
            Leg::Right => "r",
        }
    }
}

/// One of the four decay channels `(tau, sigma)` of a pair, as a vector in
/// the complex plane: `A e^{i(phi_1 + phi_2)} e^{-i Phi_d}` with the
/// propagation phase `Phi_d = K x_c` of the emitted pair's center of mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelVector {
    pub tau: Leg,
    pub sigma: Leg,
    /// Real channel amplitude `A(r_d)`.
    pub amplitude: f64,
    /// Propagation phase `Phi_d = K x_c^{tau sigma}`.
    pub propagation_phase: f64,
    /// Sum of the two local coupling phases.
    pub local_phase: f64,
    /// `amplitude * exp(i local_phase) * exp(-i propagation_phase)`.
    pub complex_value: C64,
}

/// The four channel vectors of a pair at doublon wavevector `K`.
pub fn channel_decomposition(
    k_com: f64,
    pair: &GiantEmitterPair,
    params: &WaveguideParams,
) -> Result<[ChannelVector; 4]> {
    let grid = kernel_grid(k_com, params, pair.mean_detuning())?;
    let mut out = [ChannelVector {
        tau: Leg::Left,
        sigma: Leg::Left,
        amplitude: 0.0,
        propagation_phase: 0.0,
        local_phase: 0.0,
        complex_value: C64::new(0.0, 0.0),
    }; 4];
    let mut idx = 0;
    for tau in Leg::BOTH {
        for sigma in Leg::BOTH {
            let (n1, phi1) = tau.select(&pair.emitter_1);
            let (n2, phi2) = sigma.select(&pair.emitter_2);
            let r_d = n1 as i64 - n2 as i64;
            let x_c = 0.5 * (n1 + n2) as f64;
            let amplitude = amplitude_from_grid(&grid, r_d, k_com);
            let local_phase = phi1 + phi2;
            let propagation_phase = k_com * x_c;
            out[idx] = ChannelVector {
                tau,
                sigma,
                amplitude,
                propagation_phase,
                local_phase,
                complex_value: amplitude
                    * C64::from_polar(1.0, local_phase)
                    * C64::from_polar(1.0, -propagation_phase),
            };
            idx += 1;
        }
    }
    Ok(out)
}

/// Effective coupling `F_K`: the exact sum of the four channel vectors.
pub fn effective_coupling(
    k_com: f64,
    pair: &GiantEmitterPair,
    params: &WaveguideParams,
) -> Result<C64> {
    Ok(channel_decomposition(k_com, pair, params)?
        .iter()
        .map(|c| c.complex_value)
        .sum())
}

/// Effective coupling for a pair with a symmetric frequency mismatch
/// (`omega_{e1,e2} = omega_e -+ delta_omega` at fixed sum).
///
/// Reduces exactly to [`effective_coupling`] at zero mismatch; the cosine
/// part acquires the coefficient `1/(1 - (delta_omega/delta_k)^2)` and a
/// sine part opens up whenever layout or phases break the symmetry between
/// the two emitters.
pub fn mismatch_coupling(
    k_com: f64,
    pair: &GiantEmitterPair,
    params: &WaveguideParams,
) -> Result<C64> {
    let detuning = pair.mean_detuning();
    let mismatch = 0.5 * (pair.emitter_1.mismatch + pair.emitter_2.mismatch);
    let margin = detuning.abs() - 2.0 * params.hopping.abs();
    if mismatch.abs() >= margin {
        return Err(Error::SinglePhotonLeak {
            mismatch,
            margin,
        });
    }
    let grid = kernel_grid(k_com, params, detuning)?;
    let mut f = C64::new(0.0, 0.0);
    for tau in Leg::BOTH {
        for sigma in Leg::BOTH {
            let (n1, phi1) = tau.select(&pair.emitter_1);
            let (n2, phi2) = sigma.select(&pair.emitter_2);
            let r_d = (n1 as i64 - n2 as i64) as f64;
            let x_c = 0.5 * (n1 + n2) as f64;
            let phase =
                C64::from_polar(1.0, phi1 + phi2) * C64::from_polar(1.0, -k_com * x_c);
            let mut cos_sum = 0.0;
            let mut sin_sum = 0.0;
            for &(k, l) in &grid {
                let delta_k = mode_energy(k, params) - detuning;
                let x = mismatch / delta_k;
                let c1 = 1.0 / (1.0 - x * x);
                let c2 = c1 * x;
                let kappa = k - 0.5 * k_com;
                cos_sum += l * c1 * (kappa * r_d).cos();
                sin_sum += l * c2 * (kappa * r_d).sin();
            }
            f += phase * C64::new(cos_sum - sin_sum, 0.0);
        }
    }
    Ok(f)
}

/// Directional decay rates and chiral factor of a pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiralResult {
    /// Emission rate into right-propagating doublons (`+K_r`).
    pub gamma_plus: f64,
    /// Emission rate into left-propagating doublons (`-K_r`).
    pub gamma_minus: f64,
    /// `(Gamma_+ - Gamma_-) / (Gamma_+ + Gamma_-)`, in `[-1, 1]`.
    pub chiral_factor: f64,
    /// Resonant wavevector solving `E_K = 2 delta_e`.
    pub resonant_k: f64,
    /// Set when the coupling is not small against the gap to the
    /// single-photon band, i.e. adiabatic elimination is strained.
    pub markov_warning: Option<String>,
}

/// Resonant decay rates `Gamma_+- = (g1 g2)^2 |F_{+-K_r}|^2 / (v_g J^2)` and
/// the chiral factor, with `v_g` the absolute group velocity at `K_r`.
pub fn decay_and_chirality(
    pair: &GiantEmitterPair,
    params: &WaveguideParams,
) -> Result<ChiralResult> {
    let detuning = pair.mean_detuning();
    let k_r = resonant_wavevector(detuning, params)?;
    let v_g = group_velocity(k_r, params).abs();
    let f_plus = mismatch_coupling(k_r, pair, params)?;
    let f_minus = mismatch_coupling(-k_r, pair, params)?;
    let g2 = pair.emitter_1.coupling * pair.emitter_2.coupling;
    let j2 = params.hopping * params.hopping;
    let gamma_plus = g2 * g2 * f_plus.norm_sqr() / (v_g * j2);
    let gamma_minus = g2 * g2 * f_minus.norm_sqr() / (v_g * j2);
    let total = gamma_plus + gamma_minus;
    let chiral_factor = if total > 0.0 {
        (gamma_plus - gamma_minus) / total
    } else {
        0.0
    };
    let gap = detuning.abs() - 2.0 * params.hopping.abs();
    let g_max = pair.emitter_1.coupling.abs().max(pair.emitter_2.coupling.abs());
    let markov_warning = (4.0 * g_max >= gap).then(|| {
        format!(
            "coupling g = {g_max} is not small against the single-photon gap {gap}; \
             adiabatic elimination may be inaccurate"
        )
    });
    Ok(ChiralResult {
        gamma_plus,
        gamma_minus,
        chiral_factor,
        resonant_k: k_r,
        markov_warning,
    })
}

/// Closed-form rate scale and chiral factor in the regime where the emitter
/// size exceeds the bound-state length (`d > L_u(K_r)`, `D = 0`), so only
/// the two same-leg channels interfere.
///
/// The rate scale is `|F_+|^2 + |F_-|^2` in units of `A(0)^2`:
/// `4 [1 + cos(Phi_1 + Phi_2) cos(K_r d)]`, and
/// `C = sin(Phi_1 + Phi_2) sin(K_r d) / (1 + cos(Phi_1 + Phi_2) cos(K_r d))`.
pub fn chirality_large_d(phi_1: f64, phi_2: f64, k_r: f64, d: usize) -> (f64, f64) {
    let phase = phi_1 + phi_2;
    let kd = k_r * d as f64;
    let denom = 1.0 + phase.cos() * kd.cos();
    let rate_scale = 4.0 * denom;
    let c = if denom.abs() > 0.0 {
        phase.sin() * kd.sin() / denom
    } else {
        0.0
    };
    (rate_scale, c)
}

/// Stark shift of one emitter from virtual single-photon exchange, for the
/// instantaneous coupling `g_t`:
/// `-(1/N) sum_k |g(k)|^2 / (omega_k - Delta_e)` with
/// `|g(k)|^2 = 2 g_t^2 [1 + cos(k d + Phi^e)]`. Quadratic in `g_t`.
pub fn stark_shift(emitter: &GiantEmitter, params: &WaveguideParams, g_t: f64) -> f64 {
    let d = emitter.size() as f64;
    let phi = emitter.relative_phase();
    let n = params.num_sites as f64;
    let mut sum = 0.0;
    for k in params.momentum_grid() {
        let delta_k = mode_energy(k, params) - emitter.detuning;
        sum += 2.0 * (1.0 + (k * d + phi).cos()) / delta_k;
    }
    -g_t * g_t * sum / n
}

/// Time series of the reduced (emitter + doublon-mode) amplitudes.
#[derive(Debug, Clone)]
pub struct ReducedTrace {
    pub times: Vec<f64>,
    /// `|c_e(t)|^2`.
    pub emitter_population: Vec<f64>,
    /// Total doublon population `sum_K |c_K|^2`.
    pub doublon_population: Vec<f64>,
    /// Population in left-moving modes (`K < 0`).
    pub left_population: Vec<f64>,
    /// Population in right-moving modes (`K > 0`).
    pub right_population: Vec<f64>,
    /// State norm at each sample; conserved by the Hermitian model.
    pub norm: Vec<f64>,
}

impl ReducedTrace {
    /// Log-linear decay rate of the emitter population over `[t0, t1]`.
    pub fn fitted_rate(&self, t0: f64, t1: f64) -> f64 {
        let (mut ts, mut vs) = (Vec::new(), Vec::new());
        for (t, v) in self.times.iter().zip(&self.emitter_population) {
            if *t >= t0 && *t <= t1 {
                ts.push(*t);
                vs.push(*v);
            }
        }
        log_linear_rate(&ts, &vs).0
    }
}

/// Integrate the reduced linear model: the pair amplitude couples to every
/// doublon mode on the grid with strength `-(g^2 / J sqrt(N)) F_K`, each
/// mode detuned by `Delta_K = E_K - 2 delta_e`.
///
/// Classical fixed-step fourth-order integration; the step obeys
/// `dt <= 1 / (50 max|Delta_K|)` so sweeps stay bit-reproducible.
pub fn reduced_evolution(
    pair: &GiantEmitterPair,
    params: &WaveguideParams,
    t_grid: &[f64],
) -> Result<ReducedTrace> {
    let detuning = pair.mean_detuning();
    let ks = params.momentum_grid();
    let nm = ks.len();
    let couplings: Vec<C64> = ks
        .iter()
        .map(|&k| effective_coupling(k, pair, params))
        .collect::<Result<_>>()?;
    let g2 = pair.emitter_1.coupling * pair.emitter_2.coupling;
    let w = g2 / (params.hopping * (params.num_sites as f64).sqrt());
    let deltas: Vec<f64> = ks
        .iter()
        .map(|&k| doublon_energy(k, params) - 2.0 * detuning)
        .collect();
    let max_delta = deltas.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let dt = (0.02f64).min(1.0 / (50.0 * max_delta.max(1e-6)));
    if dt < 1e-9 {
        return Err(Error::StepSizeUnderflow {
            required: dt,
            floor: 1e-9,
        });
    }

    let dim = 1 + nm;
    let deriv = |y: &[C64], dy: &mut [C64]| {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..nm {
            acc += couplings[j].conj() * y[1 + j];
        }
        // i dc_e/dt = -w sum F* c_K  ->  dc_e/dt = i w sum F* c_K
        dy[0] = C64::new(0.0, 1.0) * w * acc;
        for j in 0..nm {
            dy[1 + j] =
                C64::new(0.0, -1.0) * (deltas[j] * y[1 + j] - w * couplings[j] * y[0]);
        }
    };

    let mut y = vec![C64::new(0.0, 0.0); dim];
    y[0] = C64::new(1.0, 0.0);
    let mut k1 = vec![C64::new(0.0, 0.0); dim];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();

    let mut trace = ReducedTrace {
        times: Vec::with_capacity(t_grid.len()),
        emitter_population: Vec::with_capacity(t_grid.len()),
        doublon_population: Vec::with_capacity(t_grid.len()),
        left_population: Vec::with_capacity(t_grid.len()),
        right_population: Vec::with_capacity(t_grid.len()),
        norm: Vec::with_capacity(t_grid.len()),
    };
    let record = |t: f64, y: &[C64], trace: &mut ReducedTrace| {
        let ce = y[0].norm_sqr();
        let mut left = 0.0;
        let mut right = 0.0;
        let mut total = 0.0;
        for j in 0..nm {
            let p = y[1 + j].norm_sqr();
            total += p;
            if ks[j] < 0.0 {
                left += p;
            } else if ks[j] > 0.0 {
                right += p;
            }
        }
        trace.times.push(t);
        trace.emitter_population.push(ce);
        trace.doublon_population.push(total);
        trace.left_population.push(left);
        trace.right_population.push(right);
        trace.norm.push((ce + total).sqrt());
    };

    let mut t = 0.0;
    let mut next_sample = 0usize;
    let t_end = t_grid.last().copied().unwrap_or(0.0);
    while next_sample < t_grid.len() && t_grid[next_sample] <= t + 0.5 * dt {
        record(t, &y, &mut trace);
        next_sample += 1;
    }
    let steps = (t_end / dt).ceil() as usize;
    for _ in 0..steps {
        deriv(&y, &mut k1);
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * dt * k1[i];
        }
        deriv(&tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * dt * k2[i];
        }
        deriv(&tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = y[i] + dt * k3[i];
        }
        deriv(&tmp, &mut k4);
        for i in 0..dim {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }
        t += dt;
        while next_sample < t_grid.len() && t_grid[next_sample] <= t + 0.5 * dt {
            record(t, &y, &mut trace);
            next_sample += 1;
        }
    }

    if let Some(&norm) = trace.norm.last() {
        let budget = 1e-8 * (t_end.abs() + 1.0);
        if (norm - 1.0).abs() > budget {
            return Err(Error::NormDrift {
                drift: (norm - 1.0).abs(),
                budget,
                t: t_end,
            });
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn params() -> WaveguideParams {
        WaveguideParams::new(600, 1.0, 4.0)
    }

    fn optimal_pair(g: f64) -> GiantEmitterPair {
        GiantEmitterPair::colocated(300, 1, FRAC_PI_2, FRAC_PI_2, g, -2.55)
    }

    #[test]
    fn kernel_fully_bound_limit() {
        let p = params();
        // At K = pi the pair is bound on one site: only m = 0 survives.
        let detuning = -2.55;
        let k = 0.4;
        let want = 2.0 * 2.0f64.sqrt() * p.hopping
            / (p.num_sites as f64 * (mode_energy(k, &p) - detuning));
        let got = mode_kernel(k, PI, &p, detuning).unwrap();
        assert!((got - want).abs() < 1e-15);
    }

    #[test]
    fn kernel_matches_truncated_direct_sum() {
        let p = params();
        let detuning = -2.55;
        for &(k, k_com) in &[(0.3, 1.317), (-1.1, 0.6), (2.0, -1.317), (0.9, 2.8)] {
            let closed = mode_kernel(k, k_com, &p, detuning).unwrap();
            // Direct sum over the relative coordinate, truncated far past
            // the decay length.
            let mut acc = C64::new(0.0, 0.0);
            for m in -200i64..=200 {
                let u = crate::spectrum::doublon_wavefunction(k_com, m, &p);
                acc += C64::from_polar(1.0, -(k - 0.5 * k_com) * m as f64) * u;
            }
            let direct = 2.0 * 2.0f64.sqrt() * p.hopping
                / (p.num_sites as f64 * (mode_energy(k, &p) - detuning))
                * acc;
            assert!(direct.im.abs() < 1e-12);
            assert!(
                (closed - direct.re).abs() < 1e-10,
                "kernel mismatch at k={k}, K={k_com}: {closed} vs {}",
                direct.re
            );
            // Conjugation symmetry (the kernel is real and even under
            // joint negation).
            let neg = mode_kernel(-k, -k_com, &p, detuning).unwrap();
            assert!((closed - neg).abs() < 1e-13);
        }
    }

    #[test]
    fn kernel_rejects_resonant_single_photon() {
        let p = params();
        // detuning inside the single-photon band, mode right on top of it
        let k = (0.25f64).acos();
        let err = mode_kernel(k, 1.0, &p, -2.0 * 0.25);
        assert!(matches!(err, Err(Error::ResonantSinglePhoton { .. })));
    }

    #[test]
    fn channel_amplitude_decays_and_is_even() {
        let p = params();
        let detuning = -2.55;
        let kr = resonant_wavevector(detuning, &p).unwrap();
        let a0 = channel_amplitude(0, kr, &p, detuning).unwrap();
        let a3 = channel_amplitude(3, kr, &p, detuning).unwrap();
        let a8 = channel_amplitude(8, kr, &p, detuning).unwrap();
        assert!(a0.abs() > a3.abs() && a3.abs() > a8.abs());
        assert!(a8.abs() < 2e-3 * a0.abs(), "A(8)/A(0) = {}", a8 / a0);
        for r in [1, 2, 5] {
            let plus = channel_amplitude(r, kr, &p, detuning).unwrap();
            let minus = channel_amplitude(-r, kr, &p, detuning).unwrap();
            assert_eq!(plus, minus);
        }
    }

    #[test]
    fn channel_amplitude_matches_double_sum() {
        let p = params();
        let detuning = -2.55;
        let k_com = 1.1;
        for r in [0i64, 2, 5] {
            let closed = channel_amplitude(r, k_com, &p, detuning).unwrap();
            let mut brute = 0.0;
            for k in p.momentum_grid() {
                let mut w = 0.0;
                for m in -200i64..=200 {
                    w += crate::spectrum::doublon_wavefunction(k_com, m, &p)
                        * ((k - 0.5 * k_com) * m as f64).cos();
                }
                let l = 2.0 * 2.0f64.sqrt() * p.hopping * w
                    / (p.num_sites as f64 * (mode_energy(k, &p) - detuning));
                brute += l * ((k - 0.5 * k_com) * r as f64).cos();
            }
            assert!(
                (closed - brute).abs() < 1e-8,
                "A({r}) = {closed} vs brute {brute}"
            );
        }
    }

    /// Effective coupling from the pre-simplification double sum over
    /// emitters and modes, using the doublon-projection matrix element
    /// directly.
    fn coupling_oracle(k_com: f64, pair: &GiantEmitterPair, p: &WaveguideParams) -> C64 {
        let detuning = pair.mean_detuning();
        let n = p.num_sites as f64;
        let w_of = |kappa: f64| -> f64 {
            (-300i64..=300)
                .map(|m| {
                    crate::spectrum::doublon_wavefunction(k_com, m, p) * (kappa * m as f64).cos()
                })
                .sum()
        };
        let m_elem = |k: f64, site: usize| -> C64 {
            C64::from_polar(1.0, (k_com - k) * site as f64)
                * (2.0f64.sqrt() / n * w_of(k - 0.5 * k_com))
        };
        let emitters = [&pair.emitter_1, &pair.emitter_2];
        let mut f = C64::new(0.0, 0.0);
        for m in 0..2 {
            let me = emitters[m];
            let other = emitters[1 - m];
            for k in p.momentum_grid() {
                let delta_k = mode_energy(k, p) - detuning;
                let first: C64 = me
                    .points()
                    .iter()
                    .map(|&(np, ph)| C64::from_polar(1.0, ph - k * np as f64))
                    .sum();
                let second: C64 = other
                    .points()
                    .iter()
                    .map(|&(np, ph)| C64::from_polar(1.0, ph) * m_elem(k, np).conj())
                    .sum();
                f += p.hopping / delta_k * first * second;
            }
        }
        f
    }

    #[test]
    fn coupling_matches_unsimplified_sum() {
        let p = params();
        let mut pair = optimal_pair(0.1);
        pair.emitter_2.left_point = 302;
        pair.emitter_2.right_point = 304;
        pair.emitter_2.right_phase = 0.7;
        for &k in &[1.317, -0.8] {
            let f = effective_coupling(k, &pair, &p).unwrap();
            let oracle = coupling_oracle(k, &pair, &p);
            assert!(
                (f - oracle).norm() < 1e-10 * f.norm().max(1.0),
                "K = {k}: {f} vs {oracle}"
            );
        }
    }

    #[test]
    fn coupling_is_channel_sum() {
        let p = params();
        let pair = optimal_pair(0.1);
        let channels = channel_decomposition(1.317, &pair, &p).unwrap();
        let sum: C64 = channels.iter().map(|c| c.complex_value).sum();
        let f = effective_coupling(1.317, &pair, &p).unwrap();
        assert_eq!(f, sum);
        for c in &channels {
            let want = c.amplitude
                * C64::from_polar(1.0, c.local_phase)
                * C64::from_polar(1.0, -c.propagation_phase);
            assert_eq!(c.complex_value, want);
        }
    }

    #[test]
    fn small_emitters_cannot_be_chiral() {
        let p = params();
        for (phi1, phi2) in [(0.3, 1.2), (FRAC_PI_2, FRAC_PI_2), (2.0, -0.7)] {
            let pair = GiantEmitterPair::colocated(300, 0, phi1, phi2, 0.1, -2.55);
            for k in [0.4, 1.317, 2.1] {
                let fp = effective_coupling(k, &pair, &p).unwrap().norm();
                let fm = effective_coupling(-k, &pair, &p).unwrap().norm();
                assert!((fp - fm).abs() < 1e-12 * fp.max(1.0));
            }
            let res = decay_and_chirality(&pair, &p).unwrap();
            assert!(res.chiral_factor.abs() < 1e-9);
        }
    }

    #[test]
    fn optimal_point_closes_the_backward_loop() {
        let p = params();
        // At the quoted working point the backward loop is almost closed...
        let res = decay_and_chirality(&optimal_pair(0.1), &p).unwrap();
        assert!(res.chiral_factor > 0.9998, "C = {}", res.chiral_factor);
        assert!(res.markov_warning.is_none());
        // ...and the exact zero of |F_{-K_r}| sits within the quoted
        // precision of the detuning, with perfect chirality there.
        let backward = |det: f64| {
            let pair = GiantEmitterPair::colocated(300, 1, FRAC_PI_2, FRAC_PI_2, 0.1, det);
            let kr = resonant_wavevector(det, &p).unwrap();
            effective_coupling(-kr, &pair, &p).unwrap().norm()
        };
        let (mut lo, mut hi) = (-2.60f64, -2.50f64);
        for _ in 0..80 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if backward(m1) < backward(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let opt = 0.5 * (lo + hi);
        assert!((opt + 2.55).abs() < 0.01, "optimal detuning {opt}");
        let best = GiantEmitterPair::colocated(300, 1, FRAC_PI_2, FRAC_PI_2, 0.1, opt);
        let res = decay_and_chirality(&best, &p).unwrap();
        assert!(
            (res.chiral_factor - 1.0).abs() < 1e-9,
            "C at optimum = {}",
            res.chiral_factor
        );
        let f_minus = effective_coupling(-res.resonant_k, &best, &p).unwrap();
        let f_plus = effective_coupling(res.resonant_k, &best, &p).unwrap();
        assert!(f_minus.norm() < 1e-4 * f_plus.norm());
    }

    #[test]
    fn opposite_phases_kill_chirality() {
        let p = params();
        for d in [1, 3, 6] {
            let pair = GiantEmitterPair::colocated(300, d, 0.9, -0.9, 0.1, -2.55);
            let res = decay_and_chirality(&pair, &p).unwrap();
            assert!(
                res.chiral_factor.abs() < 1e-9,
                "d = {d}: C = {}",
                res.chiral_factor
            );
        }
    }

    #[test]
    fn global_phase_invariance() {
        let p = params();
        let mut pair = optimal_pair(0.1);
        pair.emitter_1.left_phase = 0.2;
        pair.emitter_1.right_phase = 0.2 + FRAC_PI_2;
        let base = decay_and_chirality(&pair, &p).unwrap();
        let mut shifted = pair;
        for e in [&mut shifted.emitter_1, &mut shifted.emitter_2] {
            e.left_phase += 1.234;
            e.right_phase += 1.234;
        }
        let moved = decay_and_chirality(&shifted, &p).unwrap();
        assert!((base.gamma_plus - moved.gamma_plus).abs() < 1e-12 * base.gamma_plus);
        assert!((base.gamma_minus - moved.gamma_minus).abs() < 1e-12 * base.gamma_plus);
        assert!((base.chiral_factor - moved.chiral_factor).abs() < 1e-12);
    }

    #[test]
    fn phase_negation_swaps_directions() {
        let p = params();
        for i in 0..4 {
            for j in 0..4 {
                let phi1 = -PI + 2.0 * PI * (i as f64 + 0.5) / 4.0;
                let phi2 = -PI + 2.0 * PI * (j as f64 + 0.5) / 4.0;
                let pair = GiantEmitterPair::colocated(300, 1, phi1, phi2, 0.1, -2.55);
                let neg = GiantEmitterPair::colocated(300, 1, -phi1, -phi2, 0.1, -2.55);
                let a = decay_and_chirality(&pair, &p).unwrap();
                let b = decay_and_chirality(&neg, &p).unwrap();
                assert!((a.gamma_plus - b.gamma_minus).abs() < 1e-12 * a.gamma_plus.max(1e-30));
                assert!((a.chiral_factor + b.chiral_factor).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn large_d_closed_form_tracks_full_computation() {
        let p = params();
        let detuning = -2.55;
        let kr = resonant_wavevector(detuning, &p).unwrap();
        let a0 = channel_amplitude(0, kr, &p, detuning).unwrap();
        let vg = crate::spectrum::group_velocity(kr, &p).abs();
        for d in [6, 9] {
            for (phi1, phi2) in [(FRAC_PI_2, FRAC_PI_2), (0.9, 0.4), (1.3, -0.5)] {
                let pair = GiantEmitterPair::colocated(280, d, phi1, phi2, 0.1, detuning);
                let full = decay_and_chirality(&pair, &p).unwrap();
                let (scale, c) = chirality_large_d(phi1, phi2, kr, d);
                // The residual cross-channel amplitude decays on the
                // virtual-photon range, so d = 9 is deep in the asymptotic
                // regime while d = 6 still carries percent-level corrections.
                let c_tol = if d == 9 { 0.02 } else { 0.06 };
                assert!(
                    (full.chiral_factor - c).abs() < c_tol,
                    "d = {d}, phases ({phi1}, {phi2}): C {} vs {c}",
                    full.chiral_factor
                );
                // Rate scale in units of g^4 A(0)^2 / (v_g J^2).
                let g = 0.1f64;
                let prefactor = g.powi(4) * a0 * a0 / (vg * p.hopping * p.hopping);
                let measured = (full.gamma_plus + full.gamma_minus) / prefactor;
                assert!(
                    (measured - scale).abs() < 0.05 * scale,
                    "d = {d}: rate scale {measured} vs {scale}"
                );
            }
        }
        let (_, c) = chirality_large_d(FRAC_PI_2, 0.0, FRAC_PI_2, 1);
        assert!((c - 1.0).abs() < 1e-15);
        let (_, c) = chirality_large_d(0.4, -0.4, 1.1, 5);
        assert_eq!(c, 0.0);
    }

    #[test]
    fn mismatch_reduces_and_behaves() {
        let p = params();
        let base = optimal_pair(0.1);
        let f0 = effective_coupling(1.317, &base, &p).unwrap();
        let fm = mismatch_coupling(1.317, &base, &p).unwrap();
        assert!((f0 - fm).norm() < 1e-12 * f0.norm());

        // Decay rate grows monotonically with the mismatch, chirality barely
        // moves.
        let c0 = decay_and_chirality(&base, &p).unwrap();
        let mut prev_rate = c0.gamma_plus + c0.gamma_minus;
        for i in 1..=4 {
            let dw = 0.1 * i as f64;
            let mut pair = base;
            pair.emitter_1.mismatch = dw;
            pair.emitter_2.mismatch = dw;
            let res = decay_and_chirality(&pair, &p).unwrap();
            let rate = res.gamma_plus + res.gamma_minus;
            assert!(rate > prev_rate, "rate not increasing at dw = {dw}");
            assert!(
                (res.chiral_factor - c0.chiral_factor).abs() < 0.05,
                "chirality moved too much at dw = {dw}"
            );
            prev_rate = rate;
        }

        // Pushing a level into the band is rejected.
        let mut leaky = base;
        leaky.emitter_1.mismatch = 0.7;
        leaky.emitter_2.mismatch = 0.7;
        assert!(matches!(
            mismatch_coupling(1.317, &leaky, &p),
            Err(Error::SinglePhotonLeak { .. })
        ));
    }

    #[test]
    fn stark_shift_scaling_and_oracle() {
        let p = WaveguideParams::new(64, 1.0, 4.0);
        let e = GiantEmitter::new(30, 1, FRAC_PI_2, 0.1, -2.55);
        assert_eq!(stark_shift(&e, &p, 0.0), 0.0);
        let s1 = stark_shift(&e, &p, 0.1);
        let s2 = stark_shift(&e, &p, 0.2);
        assert!((s2 / s1 - 4.0).abs() < 1e-12);
        assert!(s1 < 0.0, "level must be pushed down, got {s1}");

        // Second-order perturbation theory on the periodic single-photon
        // Hamiltonian, via dense diagonalization.
        let n = p.num_sites;
        let mut h = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            h[(i, (i + 1) % n)] = -p.hopping;
            h[((i + 1) % n, i)] = -p.hopping;
        }
        let eig = h.symmetric_eigen();
        let g = 0.1;
        let mut shift = 0.0;
        for s in 0..n {
            let mut amp = C64::new(0.0, 0.0);
            for (site, phase) in e.points() {
                amp += C64::from_polar(g, phase) * eig.eigenvectors[(site, s)];
            }
            shift += amp.norm_sqr() / (e.detuning - eig.eigenvalues[s]);
        }
        assert!(
            (s1 - shift).abs() < 1e-6 * shift.abs(),
            "stark {s1} vs oracle {shift}"
        );
    }

    #[test]
    fn reduced_evolution_limits_and_rates() {
        let p = params();
        // Decoupled limit.
        let dead = GiantEmitterPair::colocated(300, 1, FRAC_PI_2, FRAC_PI_2, 0.0, -2.55);
        let t_grid: Vec<f64> = (0..=20).map(|i| i as f64 * 10.0).collect();
        let trace = reduced_evolution(&dead, &p, &t_grid).unwrap();
        for v in &trace.emitter_population {
            assert!((v - 1.0).abs() < 1e-12);
        }

        // Decay rate and directionality against the resonant formulas.
        let pair = optimal_pair(0.1);
        let analytic = decay_and_chirality(&pair, &p).unwrap();
        let gamma = analytic.gamma_plus + analytic.gamma_minus;
        let t_grid: Vec<f64> = (0..=300).map(|i| i as f64).collect();
        let trace = reduced_evolution(&pair, &p, &t_grid).unwrap();
        let fitted = trace.fitted_rate(30.0, 280.0);
        assert!(
            (fitted - gamma).abs() < 0.05 * gamma,
            "fitted {fitted} vs analytic {gamma}"
        );
        let (l, r) = (
            *trace.left_population.last().unwrap(),
            *trace.right_population.last().unwrap(),
        );
        let c_num = (r - l) / (r + l);
        assert!(
            (c_num - analytic.chiral_factor).abs() < 0.05,
            "mode asymmetry {c_num} vs C {}",
            analytic.chiral_factor
        );
        for norm in &trace.norm {
            assert!((norm - 1.0).abs() < 1e-8 * 301.0);
        }
    }
}

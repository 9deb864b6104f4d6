//! Reduced open-system model of two remote emitter pairs connected by
//! chirally emitted photon pairs: the cascaded master equation with
//! joint-quantum-jump operators, parametric drives, and steady-state
//! diagnostics.
//!
//! Hilbert space: the four emitters A1, A2, B1, B2 as qubits, basis
//! ordered little-endian with A1 the least significant bit and `e = 1`
//! (so `|eegg>` is index 3 and `|ggee>` index 12). Each pair couples to
//! the waveguide only through its joint jump `S_alpha^- =
//! sigma_{alpha,1}^- sigma_{alpha,2}^-`, which conserves the excitation
//! parity of every pair.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::numerics::{hermitian_eigenvalues, null_space_complex};
use crate::Result;

pub const DIM: usize = 16;
const SUPER: usize = DIM * DIM;

/// Which pair sits upstream along the chiral direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairOrder {
    /// A emits first; photons travel A -> B.
    #[default]
    AUpstream,
    /// Reversed roles.
    BUpstream,
}

/// Rates and drive defining the cascaded generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeConfig {
    /// Decay rate into the downstream (right-moving) modes.
    pub gamma_plus: f64,
    /// Decay rate into the upstream (left-moving) modes.
    pub gamma_minus: f64,
    /// Parametric drive amplitude applied to both pairs.
    #[serde(default)]
    pub drive_amplitude: f64,
    /// Phase of the parametric drive.
    #[serde(default)]
    pub drive_phase: f64,
    /// Which pair is upstream.
    #[serde(default)]
    pub gep_order: PairOrder,
    /// Center separation of the pairs, in sites; must exceed the
    /// bound-state length so cross-pair emission is negligible.
    pub pair_separation: f64,
    /// Group velocity at the resonant wavevector, for delay bookkeeping.
    pub group_velocity: f64,
    /// Bound-state length at the resonant wavevector (validation only).
    #[serde(default)]
    pub bound_state_length: f64,
}

impl CascadeConfig {
    pub fn new(gamma_plus: f64, gamma_minus: f64) -> Self {
        Self {
            gamma_plus,
            gamma_minus,
            drive_amplitude: 0.0,
            drive_phase: 0.0,
            gep_order: PairOrder::AUpstream,
            pair_separation: f64::INFINITY,
            group_velocity: 1.0,
            bound_state_length: 0.0,
        }
    }

    pub fn with_drive(mut self, amplitude: f64, phase: f64) -> Self {
        self.drive_amplitude = amplitude;
        self.drive_phase = phase;
        self
    }

    /// Propagation delay `tau_D = D_q / v_g` between the pairs. The
    /// Markovian generator neglects it; comparisons against the lattice
    /// shift the downstream curves by this amount.
    pub fn delay(&self) -> f64 {
        self.pair_separation / self.group_velocity
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma_plus < 0.0 || self.gamma_minus < 0.0 {
            return Err(Error::InvalidInput(
                "decay rates must be nonnegative".into(),
            ));
        }
        if self.pair_separation <= self.bound_state_length {
            return Err(Error::InvalidInput(format!(
                "pair separation {} must exceed the bound-state length {}",
                self.pair_separation, self.bound_state_length
            )));
        }
        Ok(())
    }
}

/// 16 x 16 density operator over the four emitters, with a time stamp.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeDensityMatrix {
    pub elements: Vec<C64>,
    pub time: f64,
}

/// Basis index of a product state given as `[A1, A2, B1, B2]` with
/// `true = e`.
pub fn basis_index(excited: [bool; 4]) -> usize {
    excited
        .iter()
        .enumerate()
        .map(|(bit, &e)| usize::from(e) << bit)
        .sum()
}

pub const GGGG: usize = 0b0000;
pub const EEGG: usize = 0b0011;
pub const GGEE: usize = 0b1100;
pub const EEEE: usize = 0b1111;

impl CascadeDensityMatrix {
    pub fn pure(index: usize) -> Self {
        let mut elements = vec![C64::new(0.0, 0.0); SUPER];
        elements[index * DIM + index] = C64::new(1.0, 0.0);
        Self {
            elements,
            time: 0.0,
        }
    }

    pub fn from_pure_state(psi: &[C64]) -> Self {
        assert_eq!(psi.len(), DIM);
        let mut elements = vec![C64::new(0.0, 0.0); SUPER];
        for i in 0..DIM {
            for j in 0..DIM {
                elements[i * DIM + j] = psi[i] * psi[j].conj();
            }
        }
        Self {
            elements,
            time: 0.0,
        }
    }

    pub fn trace(&self) -> C64 {
        (0..DIM).map(|i| self.elements[i * DIM + i]).sum()
    }

    pub fn population(&self, index: usize) -> f64 {
        self.elements[index * DIM + index].re
    }

    pub fn hermiticity_error(&self) -> f64 {
        let mut max = 0.0f64;
        for i in 0..DIM {
            for j in 0..DIM {
                max = max.max(
                    (self.elements[i * DIM + j] - self.elements[j * DIM + i].conj()).norm(),
                );
            }
        }
        max
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.elements, DIM)[0]
    }

    /// Expectation value `<psi| rho |psi>`.
    pub fn fidelity_to(&self, psi: &[C64]) -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..DIM {
            for j in 0..DIM {
                acc += psi[i].conj() * self.elements[i * DIM + j] * psi[j];
            }
        }
        acc.re
    }

    /// Check the structural invariants of a physical state.
    pub fn validate(&self) -> Result<()> {
        if (self.trace() - C64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "trace {} differs from one",
                self.trace()
            )));
        }
        if self.hermiticity_error() > 1e-12 {
            return Err(Error::InvalidInput("density matrix not Hermitian".into()));
        }
        let min = self.min_eigenvalue();
        if min < -1e-10 {
            return Err(Error::PositivityLoss {
                min_eigenvalue: min,
            });
        }
        Ok(())
    }
}

/// Joint lowering operator of pair A (acts on bits 0 and 1).
fn joint_lowering(upstream_bits: (usize, usize)) -> Vec<f64> {
    let (b1, b2) = upstream_bits;
    let mask = (1 << b1) | (1 << b2);
    let mut m = vec![0.0; SUPER];
    for from in 0..DIM {
        if from & mask == mask {
            let to = from & !mask;
            m[to * DIM + from] = 1.0;
        }
    }
    m
}

/// The parametric drive Hamiltonian
/// `(Omega_d/2) e^{i phi_d} (S_A^+ + S_B^+) + h.c.`; Hermitian by
/// construction.
pub fn parametric_drive_term(amplitude: f64, phase: f64) -> Vec<C64> {
    let mut h = vec![C64::new(0.0, 0.0); SUPER];
    let raise = C64::from_polar(0.5 * amplitude, phase);
    for bits in [(0usize, 1usize), (2, 3)] {
        let lower = joint_lowering(bits);
        for i in 0..DIM {
            for j in 0..DIM {
                // S^+ = (S^-)^T for the real jump matrices.
                h[i * DIM + j] += raise * lower[j * DIM + i] + raise.conj() * lower[i * DIM + j];
            }
        }
    }
    h
}

/// Dense superoperator acting on the row-major vectorized density matrix.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    /// Row-major `256 x 256` action.
    pub matrix: Vec<C64>,
    pub config: CascadeConfig,
}

fn add_left(l: &mut [C64], m: &[C64], scale: C64) {
    for i in 0..DIM {
        for k in 0..DIM {
            let v = scale * m[i * DIM + k];
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..DIM {
                l[(i * DIM + j) * SUPER + (k * DIM + j)] += v;
            }
        }
    }
}

fn add_right(l: &mut [C64], m: &[C64], scale: C64) {
    for lcol in 0..DIM {
        for j in 0..DIM {
            let v = scale * m[lcol * DIM + j];
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            for i in 0..DIM {
                l[(i * DIM + j) * SUPER + (i * DIM + lcol)] += v;
            }
        }
    }
}

fn add_sandwich(l: &mut [C64], a: &[C64], b: &[C64], scale: C64) {
    // scale * A rho B contributes A[i,k] B[l,j] at ((i,j),(k,l)).
    for i in 0..DIM {
        for k in 0..DIM {
            let av = a[i * DIM + k];
            if av == C64::new(0.0, 0.0) {
                continue;
            }
            for ll in 0..DIM {
                for j in 0..DIM {
                    let bv = b[ll * DIM + j];
                    if bv == C64::new(0.0, 0.0) {
                        continue;
                    }
                    l[(i * DIM + j) * SUPER + (k * DIM + ll)] += scale * av * bv;
                }
            }
        }
    }
}

fn transpose(m: &[f64]) -> Vec<f64> {
    let mut t = vec![0.0; SUPER];
    for i in 0..DIM {
        for j in 0..DIM {
            t[j * DIM + i] = m[i * DIM + j];
        }
    }
    t
}

fn matmul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; SUPER];
    for i in 0..DIM {
        for k in 0..DIM {
            let av = a[i * DIM + k];
            if av == 0.0 {
                continue;
            }
            for j in 0..DIM {
                c[i * DIM + j] += av * b[k * DIM + j];
            }
        }
    }
    c
}

fn to_complex(m: &[f64]) -> Vec<C64> {
    m.iter().map(|&x| C64::new(x, 0.0)).collect()
}

/// Build the full bidirectional cascaded generator.
///
/// Both pairs dissipate through the collective jump
/// `sqrt(Gamma_+ + Gamma_-) (S_A^- + S_B^-)`, and the rate imbalance
/// `Gamma_+ - Gamma_-` appears as the coherent cascade coupling that
/// feeds the upstream pair's emission into the downstream pair without
/// back-action. In the chiral limit `Gamma_- = 0` this is exactly the
/// non-Hermitian form `H_eff = -i (Gamma_+/2)(S_A^+ S_A^- + S_B^+ S_B^-)
/// - i Gamma_+ S_B^+ S_A^-` with jump `sqrt(Gamma_+)(S_A^- + S_B^-)`.
pub fn build_liouvillian(config: &CascadeConfig) -> Result<Liouvillian> {
    config.validate()?;
    let (up_bits, down_bits) = match config.gep_order {
        PairOrder::AUpstream => ((0, 1), (2, 3)),
        PairOrder::BUpstream => ((2, 3), (0, 1)),
    };
    let s_up = joint_lowering(up_bits);
    let s_dn = joint_lowering(down_bits);
    let gp = config.gamma_plus;
    let gm = config.gamma_minus;
    let gc = gp + gm;
    let one = C64::new(1.0, 0.0);

    let mut l = vec![C64::new(0.0, 0.0); SUPER * SUPER];
    // Local dissipators at the collective rate.
    for s in [&s_up, &s_dn] {
        let sc = to_complex(s);
        let s_dag_s = to_complex(&matmul(&transpose(s), s));
        add_sandwich(&mut l, &sc, &to_complex(&transpose(s)), gc * one);
        add_left(&mut l, &s_dag_s, -0.5 * gc * one);
        add_right(&mut l, &s_dag_s, -0.5 * gc * one);
    }
    // Cross terms: sandwiches at the summed rate, directional
    // non-sandwich parts at their own rates.
    let s_up_c = to_complex(&s_up);
    let s_dn_c = to_complex(&s_dn);
    let s_up_dag = to_complex(&transpose(&s_up));
    let s_dn_dag = to_complex(&transpose(&s_dn));
    add_sandwich(&mut l, &s_up_c, &s_dn_dag, gc * one);
    add_sandwich(&mut l, &s_dn_c, &s_up_dag, gc * one);
    let dn_dag_up = to_complex(&matmul(&transpose(&s_dn), &s_up));
    let up_dag_dn = to_complex(&matmul(&transpose(&s_up), &s_dn));
    add_left(&mut l, &dn_dag_up, -gp * one);
    add_right(&mut l, &up_dag_dn, -gp * one);
    add_left(&mut l, &up_dag_dn, -gm * one);
    add_right(&mut l, &dn_dag_up, -gm * one);
    // Parametric drive.
    if config.drive_amplitude != 0.0 {
        let h = parametric_drive_term(config.drive_amplitude, config.drive_phase);
        let minus_i = C64::new(0.0, -1.0);
        add_left(&mut l, &h, minus_i);
        add_right(&mut l, &h, -minus_i);
    }
    Ok(Liouvillian {
        matrix: l,
        config: *config,
    })
}

impl Liouvillian {
    /// `out = L rho` on vectorized density matrices.
    pub fn apply(&self, rho: &[C64], out: &mut [C64]) {
        for i in 0..SUPER {
            let mut acc = C64::new(0.0, 0.0);
            let row = &self.matrix[i * SUPER..(i + 1) * SUPER];
            for (j, v) in row.iter().enumerate() {
                if v.re != 0.0 || v.im != 0.0 {
                    acc += v * rho[j];
                }
            }
            out[i] = acc;
        }
    }

    /// Column sums in the trace sense: `sum_i L[(i,i), (k,l)]`, which
    /// must vanish for a trace-preserving generator.
    pub fn trace_defect(&self) -> f64 {
        let mut max = 0.0f64;
        for k in 0..DIM {
            for ll in 0..DIM {
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..DIM {
                    acc += self.matrix[(i * DIM + i) * SUPER + (k * DIM + ll)];
                }
                max = max.max(acc.norm());
            }
        }
        max
    }
}

/// Time series of the cascaded populations.
#[derive(Debug, Clone)]
pub struct CascadeTrace {
    pub times: Vec<f64>,
    /// Population of the upstream pair's doubly excited state.
    pub upstream: Vec<f64>,
    /// Population of the downstream pair's doubly excited state.
    pub downstream: Vec<f64>,
    pub ground: Vec<f64>,
    /// Fidelity to the driven dark state (meaningful when driven).
    pub fidelity: Vec<f64>,
    pub trace_error: Vec<f64>,
    pub min_eigenvalue: Vec<f64>,
}

/// Integrate the master equation from `rho0` over the sample grid.
///
/// Fixed-step fourth-order integration with the step tied to the fastest
/// rate; trace, Hermiticity and positivity are monitored at every sample
/// and positivity loss aborts the run.
pub fn evolve_master(
    rho0: &CascadeDensityMatrix,
    config: &CascadeConfig,
    t_grid: &[f64],
) -> Result<CascadeTrace> {
    rho0.validate()?;
    let liouvillian = build_liouvillian(config)?;
    let scale = (config.gamma_plus + config.gamma_minus)
        .max(config.drive_amplitude.abs())
        .max(1e-12);
    let dt = 0.005 / scale;
    let target = dark_state(config);

    let mut rho = rho0.elements.clone();
    let mut k1 = vec![C64::new(0.0, 0.0); SUPER];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();

    let mut trace = CascadeTrace {
        times: Vec::new(),
        upstream: Vec::new(),
        downstream: Vec::new(),
        ground: Vec::new(),
        fidelity: Vec::new(),
        trace_error: Vec::new(),
        min_eigenvalue: Vec::new(),
    };
    let (up_idx, dn_idx) = match config.gep_order {
        PairOrder::AUpstream => (EEGG, GGEE),
        PairOrder::BUpstream => (GGEE, EEGG),
    };
    let record = |t: f64, rho: &[C64], trace: &mut CascadeTrace| -> Result<()> {
        let m = CascadeDensityMatrix {
            elements: rho.to_vec(),
            time: t,
        };
        trace.times.push(t);
        trace.upstream.push(m.population(up_idx));
        trace.downstream.push(m.population(dn_idx));
        trace.ground.push(m.population(GGGG));
        trace.fidelity.push(m.fidelity_to(&target));
        trace.trace_error.push((m.trace() - C64::new(1.0, 0.0)).norm());
        let min = m.min_eigenvalue();
        trace.min_eigenvalue.push(min);
        if min < -1e-8 {
            return Err(Error::PositivityLoss {
                min_eigenvalue: min,
            });
        }
        Ok(())
    };

    let mut t = rho0.time;
    let mut next = 0usize;
    while next < t_grid.len() && t_grid[next] <= t + 0.5 * dt {
        record(t, &rho, &mut trace)?;
        next += 1;
    }
    let t_end = t_grid.last().copied().unwrap_or(t);
    while t < t_end - 0.25 * dt {
        liouvillian.apply(&rho, &mut k1);
        for i in 0..SUPER {
            tmp[i] = rho[i] + 0.5 * dt * k1[i];
        }
        liouvillian.apply(&tmp, &mut k2);
        for i in 0..SUPER {
            tmp[i] = rho[i] + 0.5 * dt * k2[i];
        }
        liouvillian.apply(&tmp, &mut k3);
        for i in 0..SUPER {
            tmp[i] = rho[i] + dt * k3[i];
        }
        liouvillian.apply(&tmp, &mut k4);
        for i in 0..SUPER {
            rho[i] += dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }
        t += dt;
        while next < t_grid.len() && t_grid[next] <= t + 0.5 * dt {
            record(t, &rho, &mut trace)?;
            next += 1;
        }
    }
    Ok(trace)
}

/// The exact driven dark state of the chiral cascade, normalized:
/// `|gggg> + i (Omega_d / Gamma_+) e^{i phi_d} (|ggee> - |eegg>)`.
///
/// For `Omega_d >> Gamma_+` it approaches the maximally entangled
/// combination `(|ggee> - |eegg>)/sqrt(2)`.
pub fn dark_state(config: &CascadeConfig) -> Vec<C64> {
    let mut psi = vec![C64::new(0.0, 0.0); DIM];
    let (up_idx, dn_idx) = match config.gep_order {
        PairOrder::AUpstream => (EEGG, GGEE),
        PairOrder::BUpstream => (GGEE, EEGG),
    };
    psi[GGGG] = C64::new(1.0, 0.0);
    if config.gamma_plus > 0.0 {
        let amp = C64::new(0.0, config.drive_amplitude / config.gamma_plus)
            * C64::from_polar(1.0, config.drive_phase);
        psi[dn_idx] = amp;
        psi[up_idx] = -amp;
    }
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    psi.iter_mut().for_each(|z| *z /= norm);
    psi
}

/// Maximally entangled pair-singlet `(|ggee> - |eegg>)/sqrt(2)`.
pub fn bell_state() -> Vec<C64> {
    let mut psi = vec![C64::new(0.0, 0.0); DIM];
    psi[GGEE] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    psi[EEGG] = C64::new(-std::f64::consts::FRAC_1_SQRT_2, 0.0);
    psi
}

/// Indices of the pair-parity-even subspace reachable from the ground
/// state: both pairs hold zero or two excitations.
const EVEN_SECTOR: [usize; 4] = [GGGG, EEGG, GGEE, EEEE];

/// Steady state of the driven cascade and its fidelity to the closed-form
/// dark state.
///
/// The joint-jump structure freezes every odd-pair-parity sector, so the
/// steady state is found as the null vector of the generator restricted
/// to the sector dynamically reachable from `|gggg>`; a null space of
/// dimension above one there is reported as degenerate.
pub fn driven_steady_state(config: &CascadeConfig) -> Result<(CascadeDensityMatrix, f64)> {
    let liouvillian = build_liouvillian(config)?;
    // Restrict to the 4x4 even-sector block of the density matrix.
    let block: Vec<(usize, usize)> = EVEN_SECTOR
        .iter()
        .flat_map(|&i| EVEN_SECTOR.iter().map(move |&j| (i, j)))
        .collect();
    let bdim = block.len();
    let mut reduced = vec![C64::new(0.0, 0.0); bdim * bdim];
    for (r, &(i, j)) in block.iter().enumerate() {
        for (c, &(k, l)) in block.iter().enumerate() {
            reduced[r * bdim + c] = liouvillian.matrix[(i * DIM + j) * SUPER + (k * DIM + l)];
        }
    }
    let basis = null_space_complex(reduced, bdim, 1e-10);
    if basis.len() != 1 {
        return Err(Error::DegenerateSteadyState {
            dimension: basis.len(),
        });
    }
    let v = &basis[0];
    let mut rho = vec![C64::new(0.0, 0.0); SUPER];
    for (r, &(i, j)) in block.iter().enumerate() {
        rho[i * DIM + j] = v[r];
    }
    // Hermitize and normalize the trace.
    let mut herm = vec![C64::new(0.0, 0.0); SUPER];
    for i in 0..DIM {
        for j in 0..DIM {
            herm[i * DIM + j] = 0.5 * (rho[i * DIM + j] + rho[j * DIM + i].conj());
        }
    }
    let tr: C64 = (0..DIM).map(|i| herm[i * DIM + i]).sum();
    if tr.norm() < 1e-12 {
        return Err(Error::DegenerateSteadyState { dimension: 1 });
    }
    herm.iter_mut().for_each(|z| *z /= tr);
    let rho = CascadeDensityMatrix {
        elements: herm,
        time: f64::INFINITY,
    };
    let fidelity = rho.fidelity_to(&dark_state(config));
    Ok((rho, fidelity))
}

/// Maximum absolute difference between two sampled curves, with the
/// second one shifted by `shift` before comparison (linear interpolation
/// on the overlap).
pub fn max_abs_difference(
    times_a: &[f64],
    values_a: &[f64],
    times_b: &[f64],
    values_b: &[f64],
    shift: f64,
) -> f64 {
    let interp = |t: f64| -> Option<f64> {
        if t < times_b[0] || t > *times_b.last().unwrap() {
            return None;
        }
        let i = times_b.partition_point(|&x| x < t).min(times_b.len() - 1);
        if i == 0 {
            return Some(values_b[0]);
        }
        let (t0, t1) = (times_b[i - 1], times_b[i]);
        let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
        Some(values_b[i - 1] * (1.0 - w) + values_b[i] * w)
    };
    let mut max = 0.0f64;
    for (t, v) in times_a.iter().zip(values_a) {
        if let Some(w) = interp(t - shift) {
            max = max.max((v - w).abs());
        }
    }
    max
}

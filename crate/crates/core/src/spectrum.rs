//! Two-photon sector of the nonlinear waveguide: doublon dispersion,
//! bound-state wavefunction, lattice Green's function, resonance solving.
//!
//! The waveguide is an array of coupled cavities with nearest-neighbor
//! hopping `J` and an on-site photon-photon interaction `U`. In the
//! two-photon sector the interaction binds a pair into a doublon whose
//! center-of-mass wavevector `K` disperses as
//! `E_K = -sqrt(U^2 + 16 J^2 cos^2(K/2))` on the attractive branch.
//! The relative coordinate decays exponentially with length `L_u(K)`.
//!
//! Branch convention: the interaction strength is stored as a signed number
//! but all doublon formulas follow the configured [`DoublonBranch`];
//! `Attractive` (the default) places the band below zero and uses an
//! effective on-site interaction `-|U|`, which is also what the lattice
//! simulator puts in the Hamiltonian. `Repulsive` is the global sign flip
//! of both.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::numerics::bisect;
use crate::Result;

/// Which sign of the photon-photon interaction the doublon formulas use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DoublonBranch {
    /// Bound states below the two-photon continuum (`E_K < 0`). Default.
    #[default]
    Attractive,
    /// Global sign flip: bound states above the continuum.
    Repulsive,
}

impl DoublonBranch {
    /// -1 for attractive, +1 for repulsive.
    pub fn sign(self) -> f64 {
        match self {
            DoublonBranch::Attractive => -1.0,
            DoublonBranch::Repulsive => 1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            DoublonBranch::Attractive => DoublonBranch::Repulsive,
            DoublonBranch::Repulsive => DoublonBranch::Attractive,
        }
    }
}

/// Static description of the coupled-cavity waveguide.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveguideParams {
    /// Number of lattice sites `N`.
    pub num_sites: usize,
    /// Nearest-neighbor hopping rate `J`; sets the unit of energy.
    pub hopping: f64,
    /// On-site photon-photon interaction magnitude `U` (signed storage; the
    /// branch decides the physical sign, see [`DoublonBranch`]).
    pub nonlinearity: f64,
    /// Cavity frequency in the rotating frame; always 0 physically, kept
    /// for bookkeeping.
    #[serde(default)]
    pub cavity_frequency_offset: f64,
    /// Optional site index `n_b` whose bond to `n_b + 1` is removed.
    #[serde(default)]
    pub cut_bond: Option<usize>,
    /// Doublon branch used by every closed-form expression and by the
    /// lattice Hamiltonian's on-site term.
    #[serde(default)]
    pub branch: DoublonBranch,
}

impl WaveguideParams {
    pub fn new(num_sites: usize, hopping: f64, nonlinearity: f64) -> Self {
        Self {
            num_sites,
            hopping,
            nonlinearity,
            cavity_frequency_offset: 0.0,
            cut_bond: None,
            branch: DoublonBranch::Attractive,
        }
    }

    /// Check the structural invariants, reporting every violation.
    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut errors = Vec::new();
        if self.num_sites < 4 {
            errors.push(format!("num_sites = {} must be >= 4", self.num_sites));
        }
        if self.hopping == 0.0 {
            errors.push("hopping J must be nonzero".into());
        }
        if !self.hopping.is_finite() || !self.nonlinearity.is_finite() {
            errors.push("hopping and nonlinearity must be finite".into());
        }
        if let Some(nb) = self.cut_bond {
            if nb + 1 >= self.num_sites {
                errors.push(format!(
                    "cut_bond = {} out of range (need 0 <= n_b < {})",
                    nb,
                    self.num_sites - 1
                ));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    /// Physical on-site interaction used in formulas and in the lattice
    /// Hamiltonian: `-|U|` on the attractive branch, `+|U|` on the
    /// repulsive one.
    pub fn interaction(&self) -> f64 {
        self.branch.sign() * self.nonlinearity.abs()
    }

    /// Parameters after the mirror operation `J -> -J`, `U -> -U`: the
    /// stored signs flip and the branch toggles, so the closed-form band
    /// maps to its negative.
    pub fn sign_flipped(&self) -> Self {
        Self {
            hopping: -self.hopping,
            nonlinearity: -self.nonlinearity,
            branch: self.branch.flipped(),
            ..self.clone()
        }
    }

    /// Periodic analysis grid `K_j = -pi + 2 pi j / N`.
    pub fn momentum_grid(&self) -> Vec<f64> {
        let n = self.num_sites;
        (0..n)
            .map(|j| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * j as f64 / n as f64)
            .collect()
    }
}

/// Doublon bound-state data at one center-of-mass wavevector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublonMode {
    /// Center-of-mass wavevector `K` in `(-pi, pi]`.
    pub wavevector: f64,
    /// Band energy `E_K`.
    pub energy: f64,
    /// Relative-coordinate decay length `L_u(K)` in lattice sites.
    pub decay_length: f64,
    /// Group velocity `dE/dK` in sites per unit time.
    pub group_velocity: f64,
    /// Normalization `u_0` of the relative wavefunction.
    pub normalization: f64,
}

impl DoublonMode {
    pub fn new(wavevector: f64, params: &WaveguideParams) -> Self {
        Self {
            wavevector,
            energy: doublon_energy(wavevector, params),
            decay_length: doublon_decay_length(wavevector, params),
            group_velocity: group_velocity(wavevector, params),
            normalization: wavefunction_normalization(wavevector, params),
        }
    }
}

/// Doublon band energy `E_K = s * sqrt(U^2 + 16 J^2 cos^2(K/2))` with the
/// branch sign `s`.
pub fn doublon_energy(k: f64, params: &WaveguideParams) -> f64 {
    let u = params.nonlinearity;
    let jk = params.hopping * (0.5 * k).cos();
    params.branch.sign() * (u * u + 16.0 * jk * jk).sqrt()
}

/// Relative-coordinate decay length of the bound state, in sites.
///
/// Zero in the fully-bound limit `J cos(K/2) -> 0`; grows as `|U|`
/// decreases at fixed `K`.
pub fn doublon_decay_length(k: f64, params: &WaveguideParams) -> f64 {
    let ratio = relative_decay_ratio(k, params).abs();
    if ratio == 0.0 {
        0.0
    } else {
        -1.0 / ratio.ln()
    }
}

/// Signed amplitude ratio `u_K(r+1) / u_K(r)` for `r >= 0`.
///
/// Magnitude `exp(-1/L_u)`; the sign is negative when the hopping and the
/// branch make the bound state staggered (e.g. after a `J`-sign flip).
pub fn relative_decay_ratio(k: f64, params: &WaveguideParams) -> f64 {
    let u_abs = params.nonlinearity.abs();
    let jk = params.hopping * (0.5 * k).cos();
    if jk.abs() < 1e-300 {
        return 0.0;
    }
    let root = (u_abs * u_abs + 16.0 * jk * jk).sqrt();
    -params.branch.sign() * (root - u_abs) / (4.0 * jk)
}

/// `u_0` such that the relative wavefunction is l2-normalized over all
/// integer separations.
pub fn wavefunction_normalization(k: f64, params: &WaveguideParams) -> f64 {
    let rho2 = {
        let r = relative_decay_ratio(k, params);
        r * r
    };
    ((1.0 - rho2) / (1.0 + rho2)).sqrt()
}

/// Normalized relative wavefunction `u_K(r) = u_0 rho^{|r|}`; symmetric in
/// the photon separation `r`.
pub fn doublon_wavefunction(k: f64, r: i64, params: &WaveguideParams) -> f64 {
    let rho = relative_decay_ratio(k, params);
    wavefunction_normalization(k, params) * rho.powi(r.unsigned_abs() as i32)
}

/// Group velocity `dE_K/dK`; antisymmetric in `K`.
pub fn group_velocity(k: f64, params: &WaveguideParams) -> f64 {
    let u = params.nonlinearity;
    let j = params.hopping;
    let jk2 = j * j * (0.5 * k).cos().powi(2);
    let root = (u * u + 16.0 * jk2).sqrt();
    -params.branch.sign() * 4.0 * j * j * k.sin() / root
}

/// Positive root `K_r` of `E_{K_r} = 2 delta_e`, solved by bisection on
/// `(0, pi)` to 1e-10.
///
/// Ties at the band edges count as out of band: the pair then cannot emit
/// a propagating doublon.
pub fn resonant_wavevector(detuning: f64, params: &WaveguideParams) -> Result<f64> {
    let target = 2.0 * detuning;
    let e0 = doublon_energy(0.0, params);
    let epi = doublon_energy(std::f64::consts::PI, params);
    let (band_min, band_max) = if e0 < epi { (e0, epi) } else { (epi, e0) };
    if target <= band_min || target >= band_max {
        return Err(Error::OutOfBand {
            target,
            band_min,
            band_max,
        });
    }
    Ok(bisect(
        |k| doublon_energy(k, params) - target,
        0.0,
        std::f64::consts::PI,
        1e-10,
    ))
}

/// Free relative-motion lattice Green's function
/// `G0_K(E, r) = (1/2pi) \int dq e^{iqr} / (E + 4 J cos(K/2) cos q)`,
/// evaluated by the residue of the root inside the unit circle.
///
/// Only bound-state energies (outside the continuum `|E| <= 4|J cos(K/2)|`)
/// are supported; the doublon condition `1 - G0 * U = 0` holds at `E_K`
/// with the branch-signed interaction.
pub fn lattice_greens_function(e: f64, k: f64, r: i64, params: &WaveguideParams) -> Result<f64> {
    let a = 4.0 * params.hopping * (0.5 * k).cos();
    if a.abs() < 1e-300 {
        // Flat relative band: the integrand is constant.
        if e == 0.0 {
            return Err(Error::OnBandSingularity {
                energy: e,
                half_width: 0.0,
            });
        }
        return Ok(if r == 0 { 1.0 / e } else { 0.0 });
    }
    if e.abs() <= a.abs() {
        return Err(Error::OnBandSingularity {
            energy: e,
            half_width: a.abs(),
        });
    }
    let s = (e * e - a * a).sqrt();
    let z1 = (-e + s) / a;
    let z2 = (-e - s) / a;
    let (z_in, z_out) = if z1.abs() < z2.abs() { (z1, z2) } else { (z2, z1) };
    Ok(z_in.powi(r.unsigned_abs() as i32) / (0.5 * a * (z_in - z_out)))
}

//! Giant emitters: two-level systems coupled to the waveguide at two
//! separated points, each with its own coupling phase.

use serde::{Deserialize, Serialize};

use crate::spectrum::WaveguideParams;

/// A two-level emitter with two coupling points `n^l <= n^r` and local
/// coupling phases. Only the relative phase `Phi^e = phi^r - phi^l`
/// affects the dynamics; the absolute phases are gauge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GiantEmitter {
    /// Left coupling point `n^l`.
    pub left_point: usize,
    /// Right coupling point `n^r`.
    pub right_point: usize,
    /// Phase at the left point, radians.
    #[serde(default)]
    pub left_phase: f64,
    /// Phase at the right point, radians.
    #[serde(default)]
    pub right_phase: f64,
    /// Coupling strength `g` at each point.
    pub coupling: f64,
    /// Detuning from the cavity frequency, `Delta_e = omega_e - omega_c`.
    pub detuning: f64,
    /// Frequency mismatch `delta omega` relative to the pair mean
    /// (emitter 1 sits at `Delta_e - delta omega`, emitter 2 at
    /// `Delta_e + delta omega`).
    #[serde(default)]
    pub mismatch: f64,
}

impl GiantEmitter {
    /// Emitter with both phases referenced to zero on the left point.
    pub fn new(left_point: usize, size: usize, relative_phase: f64, coupling: f64, detuning: f64) -> Self {
        Self {
            left_point,
            right_point: left_point + size,
            left_phase: 0.0,
            right_phase: relative_phase,
            coupling,
            detuning,
            mismatch: 0.0,
        }
    }

    /// Emitter size `d = n^r - n^l`.
    pub fn size(&self) -> usize {
        self.right_point - self.left_point
    }

    /// Relative coupling phase `Phi^e = phi^r - phi^l`, wrapped to
    /// `(-pi, pi]`.
    pub fn relative_phase(&self) -> f64 {
        let mut phi = self.right_phase - self.left_phase;
        let tau = 2.0 * std::f64::consts::PI;
        while phi > std::f64::consts::PI {
            phi -= tau;
        }
        while phi <= -std::f64::consts::PI {
            phi += tau;
        }
        phi
    }

    /// Center position `(n^l + n^r) / 2` in units of the lattice constant.
    pub fn center(&self) -> f64 {
        0.5 * (self.left_point + self.right_point) as f64
    }

    /// Coupling points with their phases, left then right.
    pub fn points(&self) -> [(usize, f64); 2] {
        [
            (self.left_point, self.left_phase),
            (self.right_point, self.right_phase),
        ]
    }

    pub fn validate(&self, params: &WaveguideParams) -> std::result::Result<(), Vec<String>> {
        let mut errors = Vec::new();
        if self.left_point > self.right_point {
            errors.push(format!(
                "left point {} beyond right point {}",
                self.left_point, self.right_point
            ));
        }
        if self.right_point >= params.num_sites {
            errors.push(format!(
                "coupling point {} outside lattice of {} sites",
                self.right_point, params.num_sites
            ));
        }
        if !self.coupling.is_finite() || !self.detuning.is_finite() || !self.mismatch.is_finite() {
            errors.push("coupling, detuning and mismatch must be finite".into());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }
}

/// Two giant emitters that jointly emit one doublon when both are excited.
///
/// Supercorrelated emission requires the single-emitter detuning to sit
/// below the single-photon band, `Delta_e < -2|J|`, so that individual
/// photon emission is suppressed while `2 Delta_e` lies in the doublon
/// spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GiantEmitterPair {
    pub emitter_1: GiantEmitter,
    pub emitter_2: GiantEmitter,
}

impl GiantEmitterPair {
    pub fn new(emitter_1: GiantEmitter, emitter_2: GiantEmitter) -> Self {
        Self {
            emitter_1,
            emitter_2,
        }
    }

    /// A pair of identical co-located emitters (`D = 0`) of size `d`, the
    /// standard configuration for chiral emission.
    pub fn colocated(
        left_point: usize,
        size: usize,
        phase_1: f64,
        phase_2: f64,
        coupling: f64,
        detuning: f64,
    ) -> Self {
        Self {
            emitter_1: GiantEmitter::new(left_point, size, phase_1, coupling, detuning),
            emitter_2: GiantEmitter::new(left_point, size, phase_2, coupling, detuning),
        }
    }

    /// Center separation `D` between the two emitters.
    pub fn center_separation(&self) -> f64 {
        self.emitter_2.center() - self.emitter_1.center()
    }

    /// Mean detuning of the pair (half the pair transition energy).
    pub fn mean_detuning(&self) -> f64 {
        0.5 * (self.emitter_1.detuning + self.emitter_2.detuning)
    }

    /// Geometric center of all four coupling points.
    pub fn center(&self) -> f64 {
        0.5 * (self.emitter_1.center() + self.emitter_2.center())
    }

    /// Detunings including the symmetric mismatch convention.
    pub fn detunings_with_mismatch(&self) -> (f64, f64) {
        (
            self.emitter_1.detuning - self.emitter_1.mismatch,
            self.emitter_2.detuning + self.emitter_2.mismatch,
        )
    }

    pub fn validate(&self, params: &WaveguideParams) -> std::result::Result<(), Vec<String>> {
        let mut errors = Vec::new();
        for (label, e) in [("emitter 1", &self.emitter_1), ("emitter 2", &self.emitter_2)] {
            if let Err(errs) = e.validate(params) {
                errors.extend(errs.into_iter().map(|m| format!("{label}: {m}")));
            }
        }
        let j = params.hopping.abs();
        if self.mean_detuning() >= -2.0 * j {
            errors.push(format!(
                "detuning {} must lie below the single-photon band edge {} for supercorrelated emission",
                self.mean_detuning(),
                -2.0 * j
            ));
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    /// Both emitters, in index order.
    pub fn emitters(&self) -> [&GiantEmitter; 2] {
        [&self.emitter_1, &self.emitter_2]
    }
}

//! Time-dependent control of the lattice Hamiltonian: coupling pulses,
//! emitter retuning, the hopping/interaction sign flip, and bond cuts.

use crate::protocols::CouplingWaveform;

/// Sign flip of both the hopping and the on-site interaction at `t`,
/// with the propagation frame re-centered and the emitters optionally
/// retuned at the same instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipEvent {
    pub t: f64,
    /// Frame shift used after the flip (the populated band moves to the
    /// opposite energy).
    pub frame_shift_after: f64,
    /// Per-emitter detunings after the flip; emitters not listed keep
    /// their drive value.
    pub detunings_after: Vec<Option<f64>>,
}

/// Removal of the hopping between `bond` and `bond + 1` from time `t` on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BondCut {
    pub t: f64,
    pub bond: usize,
}

/// Drive applied to one emitter.
#[derive(Debug, Clone, PartialEq)]
pub enum EmitterDrive {
    /// Fixed coupling and detuning.
    Static { coupling: f64, detuning: f64 },
    /// Coupling follows a decay-rate waveform through the quartic map
    /// `g(t) = g0 (Gamma(t)/Gamma0)^{1/4}`, with the detuning corrected
    /// each step to cancel the instantaneous Stark shift
    /// (`stark_per_g2` is the shift per unit squared coupling).
    Shaped {
        waveform: CouplingWaveform,
        detuning: f64,
        stark_per_g2: f64,
    },
    /// Constant drive switched on smoothly over `ramp_time` with a
    /// squared-sine profile, avoiding the quench ring of virtual
    /// single-photon states that an abrupt turn-on excites. A nonzero
    /// `stark_per_g2` retunes the emitter against its instantaneous
    /// Stark shift so the emission carrier does not chirp during the
    /// ramp.
    Ramped {
        coupling: f64,
        detuning: f64,
        ramp_time: f64,
        stark_per_g2: f64,
    },
    /// Constant drive switched off smoothly from `off_time` over
    /// `ramp_time`, releasing the virtual photon cloud adiabatically.
    RampedOff {
        coupling: f64,
        detuning: f64,
        off_time: f64,
        ramp_time: f64,
        stark_per_g2: f64,
    },
}

impl EmitterDrive {
    fn coupling(&self, t: f64) -> f64 {
        match self {
            EmitterDrive::Static { coupling, .. } => *coupling,
            EmitterDrive::Shaped { waveform, .. } => waveform.coupling(t),
            EmitterDrive::Ramped {
                coupling,
                ramp_time,
                ..
            } => {
                if t >= *ramp_time {
                    *coupling
                } else if t <= 0.0 {
                    0.0
                } else {
                    coupling * (0.5 * std::f64::consts::PI * t / ramp_time).sin().powi(2)
                }
            }
            EmitterDrive::RampedOff {
                coupling,
                off_time,
                ramp_time,
                ..
            } => {
                if t <= *off_time {
                    *coupling
                } else if t >= off_time + ramp_time {
                    0.0
                } else {
                    coupling
                        * (0.5 * std::f64::consts::PI * (t - off_time) / ramp_time)
                            .cos()
                            .powi(2)
                }
            }
        }
    }

    fn detuning(&self, t: f64) -> f64 {
        match self {
            EmitterDrive::Static { detuning, .. } => *detuning,
            EmitterDrive::Shaped {
                waveform,
                detuning,
                stark_per_g2,
            } => {
                let g = waveform.coupling(t);
                detuning - stark_per_g2 * g * g
            }
            EmitterDrive::Ramped {
                detuning,
                stark_per_g2,
                ..
            }
            | EmitterDrive::RampedOff {
                detuning,
                stark_per_g2,
                ..
            } => {
                let g = self.coupling(t);
                detuning - stark_per_g2 * g * g
            }
        }
    }
}

/// Piecewise description of every time-dependent parameter of a run.
///
/// Segments are ordered by construction: the flip and bond cut activate
/// at their times and stay active, drives are evaluated pointwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    /// Per-emitter drives, indexed like the flattened emitter list.
    pub drives: Vec<EmitterDrive>,
    /// Energy shift of the propagation frame (a pure gauge: amplitudes
    /// pick up a global phase, populations are untouched). Centering it
    /// on the populated energies keeps the fixed-step integrator's norm
    /// error far below tolerance.
    pub frame_shift: f64,
    pub flip: Option<FlipEvent>,
    pub bond_cut: Option<BondCut>,
}

impl Schedule {
    /// Constant drives, no events.
    pub fn static_drives(drives: Vec<(f64, f64)>, frame_shift: f64) -> Self {
        Self {
            drives: drives
                .into_iter()
                .map(|(coupling, detuning)| EmitterDrive::Static { coupling, detuning })
                .collect(),
            frame_shift,
            flip: None,
            bond_cut: None,
        }
    }

    pub fn n_emitters(&self) -> usize {
        self.drives.len()
    }

    /// Evaluate every drive at time `t` into `sample`.
    pub fn sample_into(&self, t: f64, sample: &mut DriveSample) {
        let flipped = self.flip.as_ref().is_some_and(|f| t >= f.t);
        sample.sign = if flipped { -1.0 } else { 1.0 };
        sample.frame_shift = match &self.flip {
            Some(f) if flipped => f.frame_shift_after,
            _ => self.frame_shift,
        };
        sample.cut_bond = self.bond_cut.and_then(|c| (t >= c.t).then_some(c.bond));
        sample.couplings.clear();
        sample.detunings.clear();
        for (i, d) in self.drives.iter().enumerate() {
            sample.couplings.push(d.coupling(t));
            let mut det = d.detuning(t);
            if flipped {
                if let Some(Some(over)) = self.flip.as_ref().map(|f| f.detunings_after.get(i)) {
                    if let Some(v) = over {
                        det = *v;
                    }
                }
            }
            sample.detunings.push(det);
        }
    }
}

/// All drive values at one instant, reused across integrator stages.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveSample {
    /// +1 before a sign flip, -1 after: multiplies both the hopping and
    /// the on-site interaction.
    pub sign: f64,
    pub frame_shift: f64,
    /// Bond removed by the schedule (the static cut in the waveguide
    /// parameters applies independently).
    pub cut_bond: Option<usize>,
    pub couplings: Vec<f64>,
    pub detunings: Vec<f64>,
}

impl DriveSample {
    pub fn empty() -> Self {
        Self {
            sign: 1.0,
            frame_shift: 0.0,
            cut_bond: None,
            couplings: Vec::new(),
            detunings: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flip_and_cut_activate_at_their_times() {
        let mut schedule = Schedule::static_drives(vec![(0.1, -2.55), (0.1, -2.55)], -5.1);
        schedule.flip = Some(FlipEvent {
            t: 10.0,
            frame_shift_after: 5.1,
            detunings_after: vec![Some(2.0), None],
        });
        schedule.bond_cut = Some(BondCut { t: 10.0, bond: 42 });
        let mut s = DriveSample::empty();
        schedule.sample_into(9.99, &mut s);
        assert_eq!(s.sign, 1.0);
        assert_eq!(s.cut_bond, None);
        assert_eq!(s.detunings, vec![-2.55, -2.55]);
        assert_eq!(s.frame_shift, -5.1);
        schedule.sample_into(10.0, &mut s);
        assert_eq!(s.sign, -1.0);
        assert_eq!(s.cut_bond, Some(42));
        assert_eq!(s.detunings, vec![2.0, -2.55]);
        assert_eq!(s.frame_shift, 5.1);
    }
}

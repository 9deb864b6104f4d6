//! Run configuration: the TOML schema, validation that reports every
//! violation at once, and the translation into engine types.

use serde::{Deserialize, Serialize};

use doublon_core::emitter::{GiantEmitter, GiantEmitterPair};
use doublon_core::protocols::{ShapingConvention, TimeOriginConvention};
use doublon_core::spectrum::WaveguideParams;

/// Which experiment a config drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunKind {
    Spectrum,
    Emit,
    Sweep,
    Cascade,
    Transfer,
    Mirror,
}

impl RunKind {
    pub fn label(&self) -> &'static str {
        match self {
            RunKind::Spectrum => "spectrum",
            RunKind::Emit => "emit",
            RunKind::Sweep => "sweep",
            RunKind::Cascade => "cascade",
            RunKind::Transfer => "transfer",
            RunKind::Mirror => "mirror",
        }
    }
}

/// One emitter pair in the flat config form: identical co-located
/// emitters described by geometry and phases, with optional per-emitter
/// overrides.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairConfig {
    pub left_point: usize,
    /// Emitter size `d` (distance between its two coupling points).
    pub size: usize,
    #[serde(default)]
    pub phase_1: f64,
    #[serde(default)]
    pub phase_2: f64,
    pub coupling: f64,
    pub detuning: f64,
    /// Symmetric frequency mismatch between the two emitters.
    #[serde(default)]
    pub mismatch: f64,
    /// Center offset of emitter 2 relative to emitter 1 (pair separation
    /// `D`), in sites.
    #[serde(default)]
    pub separation: i64,
}

impl PairConfig {
    pub fn build(&self) -> GiantEmitterPair {
        let mut pair = GiantEmitterPair::colocated(
            self.left_point,
            self.size,
            self.phase_1,
            self.phase_2,
            self.coupling,
            self.detuning,
        );
        if self.separation != 0 {
            let shift = self.separation;
            let e2 = &mut pair.emitter_2;
            e2.left_point = (e2.left_point as i64 + shift).max(0) as usize;
            e2.right_point = (e2.right_point as i64 + shift).max(0) as usize;
        }
        pair.emitter_1.mismatch = self.mismatch;
        pair.emitter_2.mismatch = self.mismatch;
        pair
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumSection {
    /// Number of wavevector samples over `(-pi, pi]`.
    #[serde(default = "default_spectrum_samples")]
    pub samples: usize,
}

fn default_spectrum_samples() -> usize {
    512
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            samples: default_spectrum_samples(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmitSection {
    pub t_span: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_sample_interval")]
    pub sample_interval: f64,
    /// Smooth coupling turn-on; zero means an abrupt quench.
    #[serde(default = "default_ramp")]
    pub ramp_time: f64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Default: the pair center.
    #[serde(default)]
    pub split_center: Option<f64>,
    /// Also write the compact binary field-frame file.
    #[serde(default)]
    pub binary_fields: bool,
    /// Largest photon separation kept in field CSV output.
    #[serde(default = "default_r_max")]
    pub r_max: usize,
    /// Window for the decay fit, defaulting to the boundary-safe rule.
    #[serde(default)]
    pub fit_window: Option<(f64, f64)>,
    /// Retune the emitters against their instantaneous Stark shift so
    /// the dressed pair transition sits at the configured detuning.
    #[serde(default)]
    pub stark_compensation: bool,
}

fn default_dt() -> f64 {
    0.01
}
fn default_sample_interval() -> f64 {
    1.0
}
fn default_ramp() -> f64 {
    25.0
}
fn default_r_max() -> usize {
    32
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepAxis {
    /// One of: `phi_1`, `phi_2`, `phi_both`, `size`, `separation`,
    /// `detuning`, `mismatch`, `coupling`.
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        if self.steps <= 1 {
            return vec![self.start];
        }
        (0..self.steps)
            .map(|i| {
                self.start + (self.stop - self.start) * i as f64 / (self.steps - 1) as f64
            })
            .collect()
    }
}

pub const SWEEP_AXES: &[&str] = &[
    "phi_1",
    "phi_2",
    "phi_both",
    "size",
    "separation",
    "detuning",
    "mismatch",
    "coupling",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSection {
    pub axes: Vec<SweepAxis>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CascadeSection {
    /// Evolution horizon in units of the collective decay time.
    #[serde(default = "default_cascade_horizon")]
    pub decay_times: f64,
    #[serde(default = "default_cascade_samples")]
    pub samples: usize,
    #[serde(default)]
    pub drive_amplitude: f64,
    #[serde(default)]
    pub drive_phase: f64,
    /// Force the chiral limit (`gamma_minus = 0`) regardless of the
    /// geometric rates.
    #[serde(default)]
    pub chiral_limit: bool,
    /// Also solve for the steady state and dump the density matrix.
    #[serde(default)]
    pub steady_state: bool,
    /// Run the full lattice simulation side by side.
    #[serde(default)]
    pub include_lattice: bool,
    #[serde(default = "default_dt")]
    pub lattice_dt: f64,
}

fn default_cascade_horizon() -> f64 {
    6.0
}
fn default_cascade_samples() -> usize {
    240
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransferSection {
    /// Peak-reference coupling mapped through the quartic rate relation.
    pub g0: f64,
    #[serde(default)]
    pub shaping: Option<ShapingConvention>,
    #[serde(default)]
    pub time_origin: Option<TimeOriginConvention>,
    #[serde(default = "default_window_sigmas")]
    pub window_sigmas: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_transfer_sample")]
    pub sample_interval: f64,
    #[serde(default = "default_true")]
    pub stark_compensation: bool,
}

fn default_window_sigmas() -> f64 {
    3.2
}
fn default_transfer_sample() -> f64 {
    2.0
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MirrorSection {
    pub coupling: f64,
    /// Left point of the auto-generated receiver (negated detuning and
    /// phases); ignored when a second pair is configured explicitly.
    #[serde(default)]
    pub receiver_left: Option<usize>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_transfer_sample")]
    pub sample_interval: f64,
    #[serde(default = "default_true")]
    pub enable_flip: bool,
    #[serde(default)]
    pub snapshot_interval: Option<f64>,
}

/// Full run description, one per config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub kind: RunKind,
    pub waveguide: WaveguideParams,
    #[serde(default)]
    pub pairs: Vec<PairConfig>,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub emit: Option<EmitSection>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub cascade: Option<CascadeSection>,
    #[serde(default)]
    pub transfer: Option<TransferSection>,
    #[serde(default)]
    pub mirror: Option<MirrorSection>,
    /// Output directory; overridden by `--out`.
    #[serde(default)]
    pub output_dir: Option<String>,
}

/// Parse a config from TOML text, returning a parse error with position
/// information on malformed input.
pub fn parse_config(text: &str) -> Result<RunConfig, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

/// Validate every invariant, collecting all violations instead of
/// stopping at the first.
pub fn validate_config(config: &RunConfig) -> Result<(), Vec<String>> {
    let mut errors = Vec::new();
    if let Err(errs) = config.waveguide.validate() {
        errors.extend(errs.into_iter().map(|e| format!("waveguide: {e}")));
    }
    let mut pairs = Vec::new();
    for (i, pc) in config.pairs.iter().enumerate() {
        let pair = pc.build();
        if let Err(errs) = pair.validate(&config.waveguide) {
            errors.extend(errs.into_iter().map(|e| format!("pairs[{i}]: {e}")));
        }
        pairs.push(pair);
    }
    match config.kind {
        RunKind::Spectrum => {
            if config.spectrum.samples == 0 {
                errors.push("spectrum: samples must be positive".into());
            }
        }
        RunKind::Emit => {
            if config.pairs.is_empty() {
                errors.push("emit: at least one pair required".into());
            }
            match &config.emit {
                None => errors.push("emit: missing [emit] section".into()),
                Some(e) => {
                    if e.t_span <= 0.0 {
                        errors.push("emit: t_span must be positive".into());
                    }
                    if e.dt <= 0.0 || e.dt > 0.02 / config.waveguide.hopping.abs() {
                        errors.push(format!(
                            "emit: dt = {} outside (0, {}]",
                            e.dt,
                            0.02 / config.waveguide.hopping.abs()
                        ));
                    }
                }
            }
        }
        RunKind::Sweep => {
            if config.pairs.is_empty() {
                errors.push("sweep: a base pair is required".into());
            }
            match &config.sweep {
                None => errors.push("sweep: missing [sweep] section".into()),
                Some(s) => {
                    if s.axes.is_empty() {
                        errors.push("sweep: at least one axis required".into());
                    }
                    for axis in &s.axes {
                        if !SWEEP_AXES.contains(&axis.name.as_str()) {
                            errors.push(format!(
                                "sweep: unknown axis '{}' (expected one of {})",
                                axis.name,
                                SWEEP_AXES.join(", ")
                            ));
                        }
                        if axis.steps == 0 {
                            errors.push(format!("sweep: axis '{}' has zero steps", axis.name));
                        }
                    }
                }
            }
        }
        RunKind::Cascade => {
            if config.pairs.len() != 2 {
                errors.push(format!(
                    "cascade: exactly two pairs required, got {}",
                    config.pairs.len()
                ));
            }
            if config.cascade.is_none() {
                errors.push("cascade: missing [cascade] section".into());
            }
        }
        RunKind::Transfer => {
            if config.pairs.len() != 2 {
                errors.push(format!(
                    "transfer: exactly two pairs required, got {}",
                    config.pairs.len()
                ));
            }
            if config.transfer.is_none() {
                errors.push("transfer: missing [transfer] section".into());
            }
        }
        RunKind::Mirror => {
            match config.pairs.len() {
                1 => {
                    if config.mirror.as_ref().and_then(|m| m.receiver_left).is_none() {
                        errors.push(
                            "mirror: with one pair, mirror.receiver_left must place the receiver"
                                .into(),
                        );
                    }
                }
                2 => {}
                k => errors.push(format!("mirror: one or two pairs required, got {k}")),
            }
            if config.mirror.is_none() {
                errors.push("mirror: missing [mirror] section".into());
            }
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

/// Build the engine-side emitter list.
pub fn build_pairs(config: &RunConfig) -> Vec<GiantEmitterPair> {
    config.pairs.iter().map(|p| p.build()).collect()
}

/// Apply a sweep axis value to a pair.
pub fn apply_axis(pair: &mut GiantEmitterPair, name: &str, value: f64) {
    let set_phase = |e: &mut GiantEmitter, phi: f64| {
        e.left_phase = 0.0;
        e.right_phase = phi;
    };
    match name {
        "phi_1" => set_phase(&mut pair.emitter_1, value),
        "phi_2" => set_phase(&mut pair.emitter_2, value),
        "phi_both" => {
            set_phase(&mut pair.emitter_1, value);
            set_phase(&mut pair.emitter_2, value);
        }
        "size" => {
            let d = value.round().max(0.0) as usize;
            pair.emitter_1.right_point = pair.emitter_1.left_point + d;
            pair.emitter_2.right_point = pair.emitter_2.left_point + d;
        }
        "separation" => {
            let shift = value.round() as i64;
            let base = pair.emitter_1;
            pair.emitter_2.left_point = (base.left_point as i64 + shift).max(0) as usize;
            pair.emitter_2.right_point = (base.right_point as i64 + shift).max(0) as usize;
        }
        "detuning" => {
            pair.emitter_1.detuning = value;
            pair.emitter_2.detuning = value;
        }
        "mismatch" => {
            pair.emitter_1.mismatch = value;
            pair.emitter_2.mismatch = value;
        }
        "coupling" => {
            pair.emitter_1.coupling = value;
            pair.emitter_2.coupling = value;
        }
        _ => unreachable!("axis validated"),
    }
}

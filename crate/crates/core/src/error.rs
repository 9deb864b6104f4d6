//! Error taxonomy shared across the engine.

use thiserror::Error;

/// Everything that can go wrong in the engine, from geometry validation to
/// numerical-tolerance violations during propagation.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// The requested pair energy lies outside the doublon band, so no
    /// resonant wavevector exists and the pair cannot emit a doublon.
    #[error("target energy {target} outside the doublon band [{band_min}, {band_max}]")]
    OutOfBand {
        target: f64,
        band_min: f64,
        band_max: f64,
    },

    /// Green's-function evaluation requested at an energy inside the
    /// relative-motion continuum, where the bound-state contour formula
    /// does not apply.
    #[error("energy {energy} lies inside the continuum band (half-width {half_width})")]
    OnBandSingularity { energy: f64, half_width: f64 },

    /// A single-photon mode is (numerically) resonant with the emitter,
    /// violating the premise of adiabatic elimination.
    #[error("single-photon mode resonant with emitter: |delta_k| = {delta} < {threshold}")]
    ResonantSinglePhoton { delta: f64, threshold: f64 },

    /// A frequency-mismatched emitter level has been pushed into the
    /// single-photon band.
    #[error("frequency mismatch {mismatch} pushes an emitter level into the single-photon band (margin {margin})")]
    SinglePhotonLeak { mismatch: f64, margin: f64 },

    /// A coupling point or bond index falls outside the lattice.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// State norm drifted beyond tolerance during unitary propagation.
    #[error("norm drift {drift:.3e} exceeds budget {budget:.3e} at t = {t}")]
    NormDrift { drift: f64, budget: f64, t: f64 },

    /// Time step too large for the current operator norm.
    #[error("time step {dt} unstable for operator bound {h_bound} (dt*|H| = {product:.3})")]
    Stability { dt: f64, h_bound: f64, product: f64 },

    /// Fixed-step controller cannot meet the requested tolerance.
    #[error("step size underflow: required dt {required:.3e} below floor {floor:.3e}")]
    StepSizeUnderflow { required: f64, floor: f64 },

    /// Photon-pair sector too weakly populated for a well-conditioned
    /// correlation function.
    #[error("photon-pair occupation {occupation:.3e} below threshold {threshold:.3e}")]
    LowOccupation { occupation: f64, threshold: f64 },

    /// Population trace is not monotonically decreasing, so an exponential
    /// fit would be meaningless (bound-state or non-Markovian regime).
    #[error("population trace not monotonic in fit window ({rising} of {total} steps rising)")]
    NonMonotonic { rising: usize, total: usize },

    /// Density-matrix eigenvalue dropped below the positivity floor.
    #[error("density matrix lost positivity: min eigenvalue {min_eigenvalue:.3e}")]
    PositivityLoss { min_eigenvalue: f64 },

    /// The Liouvillian null space has dimension > 1; the steady state is not
    /// unique and the caller must disambiguate.
    #[error("degenerate steady state: null space dimension {dimension}")]
    DegenerateSteadyState { dimension: usize },

    /// Mirror sequence timing is inconsistent with the wavepacket position.
    #[error("mirror sequence error: {0}")]
    Sequence(String),

    /// Boundary reflections reach an emitter pair inside the protocol window.
    #[error("boundary reflection reaches an emitter at t = {reach_time} inside window ending {window_end}")]
    ReflectionContamination { reach_time: f64, window_end: f64 },

    /// Pulse denominator too close to its pole; shaping constant too small.
    #[error("pulse denominator {denominator:.3e} within {threshold:.3e} of pole at t = {t}")]
    PoleProximity {
        denominator: f64,
        threshold: f64,
        t: f64,
    },

    /// Precondition on an operation's input violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

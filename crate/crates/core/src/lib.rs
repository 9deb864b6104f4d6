//! Simulation engine for supercorrelated photon-pair (doublon) emission from
//! giant-emitter pairs coupled to a nonlinear coupled-cavity waveguide.
//!
//! The crate is organized around three tiers of description that can be
//! cross-validated against each other:
//!
//! - [`spectrum`] / [`effective`]: closed-form and semi-analytic results for
//!   the two-photon bound state (dispersion, decay length, Green's function)
//!   and the interference-channel machinery that controls directional
//!   emission (effective couplings, decay rates, chiral factor).
//! - [`lattice`]: exact sparse propagation of the full two-excitation sector
//!   of a finite waveguide with one or two emitter pairs. This is the
//!   ground-truth oracle for everything the reduced descriptions predict.
//! - [`cascade`] / [`protocols`]: the reduced open-system model of two remote
//!   pairs (joint-jump master equation, driven steady states) and the
//!   time-dependent control sequences (shaped-pulse state transfer, the
//!   sign-flip mirror) executed on the lattice simulator.
//!
//! Energies are measured in units of the hopping rate `J` and times in `1/J`
//! throughout; the waveguide frame rotates with the cavity frequency.

pub mod cascade;
pub mod effective;
pub mod emitter;
pub mod error;
pub mod lattice;
pub mod numerics;
pub mod protocols;
pub mod spectrum;


pub use cascade::{CascadeConfig, CascadeDensityMatrix, Liouvillian};
pub use effective::{ChannelVector, ChiralResult};
pub use emitter::{GiantEmitter, GiantEmitterPair};
pub use error::Error;
pub use lattice::{Schedule, SimulationTrace, TwoExcitationBasis, TwoExcitationState};
pub use protocols::{MirrorSequence, PulseFamily, TransferPulse};


pub use spectrum::{DoublonBranch, DoublonMode, WaveguideParams};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

//! Electromagnetically induced grating in a Λ three-level vapour.
//!
//! A weak probe and a standing-wave coupling field drive a Doppler-broadened
//! Λ system. The crate computes the spatial harmonics of the probe
//! susceptibility ([`lineshape`]), averages them over the thermal velocity
//! distribution ([`doppler`]), propagates the probe and the backward
//! diffracted field through the cell ([`optics`]) and sweeps the detunings
//! ([`sweep`]).

pub mod banded;
pub mod doppler;
pub mod error;
pub mod lineshape;
pub mod model;
pub mod optics;
pub mod quadrature;
pub mod scenario;
pub mod sweep;

pub use doppler::{VelocityGrid, VelocityScheme};
pub use error::{Error, Result};
pub use lineshape::{HarmonicSolution, SusceptibilityHarmonics, Truncation};
pub use model::{DerivedFrequencies, PhysicalConstants, SystemParams};
pub use optics::{CoupledModeInput, PropagationResult};
pub use scenario::ScenarioConfig;
pub use sweep::{PeakMetrics, SweepOptions, SweepRecord, SweepTable};

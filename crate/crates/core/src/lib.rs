//! Simulation engine for two-dimensional XY models realized as Josephson
//! junction arrays: square-lattice geometry with tunable frustration,
//! capacitance-matrix charging dynamics, thermal Langevin sampling of the
//! Gibbs state, equilibrium and dynamical observables, and the input-output
//! map to cavity reflection spectra.
//!
//! All internal quantities are in reduced units: energies in units of the
//! junction energy `E_J`, time in `hbar/E_J`, charge in units of `2e`,
//! temperature as `k_B T / E_J`, and capacitance in units of `(2e)^2/E_J`.
//! The [`units`] module holds the conversions to laboratory units.

pub mod benchmark;
pub mod capacitance;
pub mod cavity;
pub mod dynamics;
pub mod lattice;
pub mod linalg;
pub mod material;
pub mod observables;
pub mod units;

pub use capacitance::{CapacitanceMatrix, CapacitanceModel, NoiseFactor};
pub use cavity::{CavityParams, ReflectionTrace, S11Fit};
pub use dynamics::{PhaseState, SimParams, TrajectoryRecord};
pub use lattice::{Bond, BondTable, Boundary, Gauge, GaugeField, LatticeSpec, Plaquette};
pub use material::SuperconductorParams;
pub use observables::{
    Axis, ChiralityMap, CorrelationData, ExponentFit, PeakFit, Spectrum, WelchParams,
};

//! Casimir forces between gold sphere–plate resonators and the dynamics of
//! two cantilevers parametrically coupled through that force.
//!
//! The crate is organised bottom-up:
//!
//! - [`materials`]: dielectric response and Fresnel coefficients
//! - [`lifshitz`]: Lifshitz energy, PFA force, thermal corrections
//! - [`field`]: interpolated force table used by the integrator
//! - [`mechanics`]: nonlinear two-cantilever equations of motion
//! - [`spectral`]: effective non-Hermitian Hamiltonian and its exceptional point
//! - [`protocol`]: transduction, PSD maps, control loops and transfer efficiency

pub mod error;
pub mod field;
pub mod lifshitz;
pub mod materials;
pub mod mechanics;
pub mod protocol;
pub mod quadrature;
pub mod spectral;
pub mod units;

pub use error::{CasimirError, Result};
pub use field::{build_field, CasimirField, ForceLaw, ForceModel, ForceSample, GridSpec};
pub use lifshitz::{Geometry, ThermalSetting};
pub use materials::{DielectricModel, MirrorStack, TransverseMode};
pub use mechanics::{
    simulate, Cantilever, DriveSignal, EnergySeries, InitialState, ModulationKnot, ModulationSchedule,
    SimulationOptions, SystemConfig, Trajectory,
};
pub use protocol::{
    ControlLoop, Direction, EfficiencyPoint, PsdMap, PsdSettings, PsdSweep, TransferResult, TransferSettings,
};
pub use quadrature::QuadratureSpec;
pub use spectral::{EffectiveHamiltonian, EigenPair, ExceptionalPoint, SpectralMapping};

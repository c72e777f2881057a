//! Simulation and design toolkit for a spin-wave quantum light router.

pub mod config;
pub mod constants;
pub mod error;
pub mod experiments;
pub mod field;
pub mod hardware;
pub mod optimizer;
pub mod params;
pub mod phasematch;
pub mod pulses;
pub mod scenario;
pub mod solver;
pub mod zeeman;

pub use error::{Result, RouterError};
pub use field::ComplexField;
pub use params::{GridSpec, PhysicalUnits, SimParams};
pub use pulses::{ControlSpec, SignalSpec};

//! Shaped-pulse control of excitonic states in multichromophore complexes.
//!
//! The crate models a Frenkel-exciton system coupled to independent Debye baths,
//! propagates the secular Redfield master equation in the rotating frame under a
//! shaped laser field, and wraps the dynamics in control objectives, derivative-free
//! optimizers and pump-probe observables.
//!
//! Energies are in cm⁻¹, times in fs, field amplitudes in V/m and dipoles in Debye.

pub mod bath;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod model;
pub mod objectives;
pub mod optimize;
pub mod pulse;
pub mod spectra;
pub mod units;

pub use error::{Error, Result};

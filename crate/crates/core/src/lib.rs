//! Simulation library for a driven double-cavity optomechanical system:
//! two harmonically bound mirrors coupled by photon tunneling through a
//! semi-transparent middle mirror.
//!
//! The library computes
//! - mean-field steady states of the quantum Langevin equations,
//! - the fifth-order displacement polynomial and its branch structure
//!   (optical bistability and multistability),
//! - effective mirror masses from the linearized force balance,
//! - the linear probe response: OMIA and Fano lineshapes in the backward
//!   reflection and forward transmission coefficients.
//!
//! See the `figures` module for preset parameter sets that regenerate the
//! reference datasets, and the `omsim` binary for the CLI front end.

pub mod effective_mass;
pub mod error;
pub mod figures;
pub mod linear_response;
pub mod multistability;
pub mod params;
pub mod steady_state;

pub use error::{Error, Result};
pub use params::{Advisories, Config, SystemParams, HBAR};
pub use steady_state::{DetuningMode, SteadyState};

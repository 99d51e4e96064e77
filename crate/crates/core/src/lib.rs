//! Structure-preserving simulator and equilibrium analyzer for a simplified
//! Ericksen-Leslie nematic liquid-crystal flow on the unit square.
//!
//! The crate couples the incompressible Navier-Stokes equations with a
//! director-field equation (optional stretching), integrates them with an
//! energy-monitored semi-implicit scheme, solves the associated stationary
//! problem, probes the linearized operator spectrum, and renders
//! theorem-style verdicts (energy dissipation, maximum principle, omega-limit
//! convergence, decay rates) from trajectory logs.

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod dynamics;
mod fft;
pub mod grid;
pub mod init;
pub mod io;
pub mod ops;
pub mod potential;
pub mod stationary;

mod error;

pub use error::{Error, Result};

//! Kinetic Cucker–Smale flocking coupled through drag to the isentropic
//! compressible Navier–Stokes equations: a semi-Lagrangian/finite-difference
//! solver together with the diagnostics used to check it.
//!
//! The crate is organised bottom-up: [`phase_space`] holds grids and state,
//! [`alignment`], [`kinetic`] and [`fluid`] are the operators and sub-steps,
//! [`driver`] couples them in time, [`diagnostics`] and [`picard`] measure
//! the results, and [`io`] reads configurations and writes outputs.

pub mod alignment;
pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod fluid;
pub mod io;
pub mod kinetic;
pub mod phase_space;
pub mod picard;
pub mod verify;

pub use error::{CflBreakdown, Error, Result};

//! Pseudo-spectral solver for traveling waves of the free-boundary
//! compressible Navier-Stokes system in flattened perturbative-enthalpy form.

pub mod diagnostics;
pub mod equilibrium;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod io;
pub mod linear;
pub mod operators;
pub mod scalar;
pub mod solver;
pub mod spaces;

pub use error::{Error, Result};

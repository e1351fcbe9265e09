//! Variational analysis of the nuclear norm and stability checks for KKT
//! points of nuclear-norm-regularized convex programs.

pub mod cones;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod nucops;
pub mod selftest;
pub mod solver;
pub mod spectra;
pub mod stability;

pub use error::{Error, Result};

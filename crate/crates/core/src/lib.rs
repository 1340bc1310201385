//! Eulerian and semi-Lagrangian exponential time integrators for advective
//! problems, with a stability laboratory and a convergence harness.

pub mod cli;
pub mod error;
pub mod exp_core;
pub mod field;
pub mod grid;
pub mod harness;
pub mod linalg;
pub mod problems;
pub mod schemes;
pub mod settls;
pub mod stability;

pub use error::{Error, Result};

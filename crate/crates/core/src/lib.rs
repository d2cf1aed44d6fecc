//! Simulation and potential theory for skew-perturbed symmetric stable
//! processes: killed walks, resolvent densities, perturbed resolvents and
//! excursion synthesis.

pub mod error;
pub mod excursion;
pub mod golden;
pub mod perturbed;
pub mod potential;
pub mod quad;
pub mod rng;
pub mod stable;
pub mod stats;

pub use error::{Error, Result};

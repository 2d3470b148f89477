//! Simulation and analysis of isotropic Gaussian random fields on the unit sphere.
//!
//! Fields are synthesized from an angular power spectrum `C_ℓ`; the crate then measures
//! level sets, local times and Φ-capacities of the resulting `R^d`-valued fields.

pub mod capacity;
pub mod covariance;
pub mod error;
pub mod experiments;
pub mod geom;
pub mod grid;
pub mod harmonics;
pub mod level_set;
pub mod local_time;
pub mod rng;
pub mod spectrum;
pub mod stats;
pub mod synthesis;
pub mod voronoi;

pub use error::{Error, Result};

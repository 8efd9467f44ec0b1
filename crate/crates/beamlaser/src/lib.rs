//! Simulation and theory tools for a superradiant beam laser: atoms crossing
//! a lossy optical cavity, modeled both by stochastic ensemble trajectories
//! and by closed-form mean-field results, plus experiment design helpers.

pub mod estimators;
pub mod error;
pub mod quad;
pub mod special;

pub mod config;
pub mod design;
pub mod langevin;
pub mod meanfield;
pub mod params;

pub use error::{BeamLaserError, Result};

//! Spectral Galerkin Navier–Stokes on the periodic torus with exact
//! long-time expansions, the normalization map and Poincaré–Dulac normal
//! forms.
//!
//! Scaling is fixed to unit viscosity and period `2π`, so the Stokes
//! eigenvalues are the integers `|k|^2`. A flow with viscosity `nu` on a box
//! of side `L` maps onto this one by `x -> 2π x / L`, `t -> 4π² nu t / L²`.

pub mod asymptotics;
pub mod error;
pub mod exec;
pub mod exppoly;
pub mod fit;
pub mod init;
pub mod normal_form;
pub mod pd;
pub mod solver;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};

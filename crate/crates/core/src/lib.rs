//! Brownian motion of a classical particle coupled to a quantum heat bath.
//!
//! Units: `k_B = 1`, so temperatures are energies; `hbar` is a parameter and
//! `hbar = 0` recovers classical Brownian motion throughout.

// `!(x <= limit)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod constants;
pub mod error;
pub mod fields;
pub mod grid;
pub mod io;
pub mod langevin;
pub mod noise;
pub mod operators;
pub mod params;
pub mod pde;
pub mod potential;
pub mod special;

pub use error::{Error, Result};
pub use fields::{DensityField, PhaseSpaceField};
pub use grid::{SpaceGrid, TimeGrid};
pub use params::BathParams;
pub use potential::Potential;

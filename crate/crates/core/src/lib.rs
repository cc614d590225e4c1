//! Exactly and quasi-exactly solvable difference Schrödinger operators built
//! from sinusoidal coordinates.

pub mod basicnum;
pub mod cli;
pub mod dense;
pub mod error;
pub mod lattice;
pub mod model;
pub mod opexpr;
pub mod poly;
pub mod polyop;
pub mod potential;
pub mod qes;
pub mod scalar;
pub mod sinusoid;
pub mod verify;

pub use error::{Error, Result};

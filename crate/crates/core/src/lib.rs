//! Pseudo-spectral simulator and analysis toolkit for the two-dimensional
//! massive Dirac equation coupled to a static Chern-Simons-Proca field.

pub mod cm;
pub mod config;
pub mod diagnostics;
pub mod dirac;
pub mod dynamics;
pub mod error;
pub mod fft;
pub mod field;
pub mod gauge;
pub mod grid;
pub mod resonance;
pub mod runner;
pub mod snapshot;
pub mod spectral;

pub use error::{Error, Result};
pub use field::{Field, Representation, ScalarField, SpinorField};
pub use grid::{bracket, Grid};

//! Coupled-waveguide potential builder, sparse 2D eigensolver, and
//! evanescent-speed analysis pipeline.
//!
//! Internal unit system throughout: lengths in µm, energies in meV, times
//! in ps. See [`units`] for the constants and mass conversion.

pub mod analysis;
pub mod error;
pub mod evolve;
pub mod fieldio;
pub mod grid;
pub mod lanczos;
pub mod ldl;
pub mod order;
pub mod pipeline;
pub mod potential;
pub mod pulse;
pub mod sparse;
pub mod spectrum;
pub mod tridiag;
pub mod units;
pub mod velocity;

pub use error::{Error, Result};

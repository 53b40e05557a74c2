//! Ramsey interferometry on an ion Coulomb crystal quenched across the
//! linear–zigzag instability.
//!
//! The pipeline runs bottom-up:
//!
//! 1. [`params`] turns trap settings into the dimensionless (α, α_dip, g, Δ, ħ̃).
//! 2. [`crystal`] finds the equilibria for both internal states of the central ion.
//! 3. [`modes`] diagonalizes each equilibrium into normal modes.
//! 4. [`quench`] builds the Bogoliubov map between the two phonon vacua.
//! 5. [`visibility`] evaluates the closed-form overlap 𝒪(t) and 𝒱(t) = |𝒪(t)|.
//! 6. [`spectrum`] Fourier-analyzes 𝒱(t) and ln 𝒱(t) and labels the peaks.
//!
//! [`oracle`] is an independent truncated-Fock reference used by the tests.
//!
//! All of the numerical core is generic over [`Float`]; the `*64` aliases
//! below are the instantiations the CLI uses.

// `!(x > 0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod crystal;
pub mod error;
mod linalg;
pub mod modes;
pub mod num;
pub mod oracle;
pub mod params;
pub mod pipeline;
pub mod quench;
pub mod spectrum;
pub mod visibility;

pub use error::{Error, Result};
pub use num::Float;

pub type TrapSpec64 = params::TrapSpec<f64>;
pub type DimensionlessParams64 = params::DimensionlessParams<f64>;
pub type CrystalParams64 = crystal::CrystalParams<f64>;
pub type EquilibriumConfiguration64 = crystal::EquilibriumConfiguration<f64>;
pub type NormalModeBasis64 = modes::NormalModeBasis<f64>;
pub type QuenchMap64 = quench::QuenchMap<f64>;
pub type VisibilitySeries64 = visibility::VisibilitySeries<f64>;
pub type SpectrumResult64 = spectrum::SpectrumResult<f64>;
pub type Scenario64 = pipeline::Scenario<f64>;

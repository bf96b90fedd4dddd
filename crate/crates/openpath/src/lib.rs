//! Reconstruction of proton momentum distributions, principal
//! frequencies, kinetic energies and directional end-to-end distributions
//! from open-path samples and harmonic lattice dynamics.
//!
//! The crate provides:
//! - an estimator turning end-to-end displacement samples into correlation
//!   matrices, principal spectra and spherical distributions,
//! - the quasi-harmonic variance/frequency maps and isotropic-model fits,
//! - crystal-symmetry superposition of environmental distributions,
//! - harmonic lattice dynamics (finite-difference Hessians, phonon
//!   spectra, per-atom momentum correlations, mode populations),
//! - an open-chain path-integral Monte Carlo sampler with exact 1D
//!   grid-diagonalization oracles for validation.

pub mod error;
pub mod estimator;
pub mod linalg;
pub mod numerics;
pub mod quasiharmonic;
pub mod units;

pub mod pathsampler;

pub use error::{Error, Result};

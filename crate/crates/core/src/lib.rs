//! Numerical laboratory for localized `L^p` bounds of Laplace eigenfunctions
//! on the round sphere and the flat torus.
//!
//! The crate builds the classical extremal eigenfunctions (zonal and
//! highest-weight spherical harmonics, torus plane waves) and random
//! spectral-window combinations as sampled fields, applies smoothed spectral
//! window operators to them, and measures global and local norms. The
//! [`analysis`] module fits log–log scaling exponents and turns the
//! inequalities of the localized `L^p` theory into ratio audits.

pub mod analysis;
pub mod cli;
pub mod covering;
pub mod error;
pub mod geometry;
pub mod harmonics;
pub mod measures;
pub mod numeric;
pub mod spectral_filter;

pub use error::{Error, Result};

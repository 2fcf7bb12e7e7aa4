//! Stochastic cascades attached to the Fourier-space mild Navier-Stokes
//! equations.
//!
//! The crate is `no_std` (with `alloc`). IO, configuration and parallel
//! drivers live in the companion `nscascade` crate.
//!
//! Module map:
//!
//! * [`specfun`] and [`rng`]: the dilogarithm, `ln Γ`, truncated exponentials
//!   and counter-addressable random streams.
//! * [`kernels`]: the dilogarithmic and Bessel majorizing kernels and exact
//!   samplers of offspring wavenumber pairs.
//! * [`cascade`]: branching trees, explosion functionals `ζₙ`, `ζ̃ₙ` and
//!   branch counts.
//! * [`estimator`]: Monte Carlo evaluation of mild solutions through the
//!   recursive `⊙` product.
//! * [`integraleq`]: Picard iteration for the non-explosion integral equations.
//! * [`analysis`]: Kolmogorov-Smirnov tests and bound checks.

#![cfg_attr(not(feature = "std"), no_std)]
// NaN-rejecting guards are written as `!(x > 0.0)`; tabulated constants keep all digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

extern crate alloc;

mod math;

pub mod analysis;
pub mod cascade;
pub mod error;
pub mod estimator;
pub mod integraleq;
pub mod kernels;
pub mod quad;
pub mod rng;
pub mod specfun;
pub mod vector;

pub use error::{Error, Result};
pub use rng::RngStream;
pub use vector::Wavenumber;

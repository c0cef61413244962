//! Simulation and verification laboratory for central limit theorems of
//! strictly stationary random fields on `Z^d` under interlaced
//! `rho'`-mixing.
//!
//! The crate is organized bottom-up:
//!
//! * [`lattice`]: shapes, rectangles, row-major iteration and site-keyed
//!   counter-based randomness.
//! * [`field`]: moving-average field generators with declared mixing
//!   profiles, truncation and tail transforms.
//! * [`spectral`]: Fejér kernels, exact autocovariance, exact partial-sum
//!   variance and Fejér quadrature of the spectral density.
//! * [`blocking`]: Bernstein big/small block schedule and decomposition.
//! * [`lab`]: Monte Carlo ensembles, normality tests, covariance
//!   estimation, Cramér–Wold projections and tightness profiles.
//! * [`cli`]: JSON-configured batch runner behind the `mixlab` binary.

pub mod blocking;
pub mod cli;
pub mod error;
pub mod field;
pub mod lab;
pub mod lattice;
pub mod numeric;
pub mod spectral;

pub use error::{Error, Result};

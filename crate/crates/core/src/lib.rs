//! 3DVAR filtering for the two-dimensional incompressible Navier-Stokes
//! equation on a periodic square.
//!
//! The crate is `no_std` (with `alloc`). Everything here is a pure function
//! of its inputs plus explicitly passed random number generators; file
//! formats, configuration and the command line live in the companion
//! `nse3dvar` crate.
//!
//! Layout:
//! - [`grid`], [`field`], [`transform`]: the truncated Fourier lattice,
//!   spectral fields, projections, norms and real/spectral transforms.
//! - [`dynamics`]: the dealiased pseudo-spectral vorticity solver with a
//!   fourth-order exponential time differencing integrator.
//! - [`observations`]: attractor spin-up and the noisy projected
//!   observation model.
//! - [`filter`]: the discrete-time 3DVAR mean update and its error bounds.
//! - [`continuous`]: the frequent-observation limit, integrated by splitting
//!   a Navier-Stokes step from an exact Ornstein-Uhlenbeck relaxation.
#![cfg_attr(not(feature = "std"), no_std)]
// `!(x >= 0.0)` also rejects NaN, which is the point
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod continuous;
pub mod dynamics;
mod error;
mod math;
pub mod field;
pub mod filter;
pub mod grid;
pub mod observations;
pub mod rng;
pub mod transform;

pub use error::{Error, Result};

pub use num_complex::Complex64;

/// Version of this library, echoed into every output file header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Numerics for the half-space Airy line ensemble.
//!
//! The crate is organised bottom-up:
//!
//! * [`skewlin`] — complex skew-symmetric linear algebra (Pfaffians, block
//!   assembly, determinant cross-checks).
//! * [`contour`] — parametrised contours in the complex plane with composite
//!   Gauss–Legendre rules, and single/double contour quadrature.
//! * [`kernels`] — the Pfaffian correlation kernels: the finite Schur-process
//!   kernel, the pre-limit kernel on the scaling lattice, the limiting kernel,
//!   the crossover kernel and the extended Airy kernel.
//! * [`fredholm`] — correlation functions, factorial-moment predictions and
//!   gap probabilities (Fredholm Pfaffians and the Tracy–Widom `F_2`
//!   reference).
//! * [`ensembles`] — samplers for reverse geometric walks, interlacing
//!   ensembles (rejection and Glauber dynamics with monotone coupling), the
//!   Pfaffian Schur measure and avoiding reverse Brownian motions.
//! * [`harness`] — configuration parsing, experiment dispatch and CSV/SVG
//!   output used by the `halfspace-airy` command-line tool.

// Input checks are written as `!(a < b)` on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contour;
pub mod ensembles;
pub mod error;
pub mod fredholm;
pub mod harness;
pub mod kernels;
pub mod skewlin;
pub mod special;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

//! Numerical evaluation of products of mass-shell and energy-momentum
//! conserving delta functions on concrete test functions.
//!
//! The crate is organised bottom-up:
//!
//! - [`kinematics`]: on-shell energies, the conserved-energy function and its
//!   gradient, the singular cone of collinear massless configurations and its
//!   constrained neighborhood coordinates.
//! - [`algebra`]: polynomial x Gaussian test-function sequences, the
//!   positive-energy cutoff map, the tensor product and LSZ one-leg states.
//! - [`quadrature`]: Monte Carlo evaluation of the delta functional by
//!   co-area root finding, a nascent-delta oracle, dyadic annulus scans around
//!   the singular cone and exponent fitting.
//! - [`vev`]: connected functions of the constant-coupling scalar model, the
//!   free two-point functional and the four-leg LSZ amplitude.
//! - [`cli`]: report-producing command implementations behind the
//!   `shellquad` binary.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod cli;
mod error;
pub mod kinematics;
pub mod parallel;
pub mod quadrature;
pub mod tolerance;
pub mod vev;

pub use error::{Error, Result};

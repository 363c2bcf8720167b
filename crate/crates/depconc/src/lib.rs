//! Concentration-of-measure tail bounds for Lipschitz functions of
//! *dependent* finite-state random vectors, with every bound certified
//! against exact brute-force enumeration at desk scale.
//!
//! The pipeline, bottom to top:
//!
//! - [`model`]: finite metric product spaces, joint laws in four
//!   representations (explicit, markov, gibbs chain, product), exact
//!   marginals and conditionals, local oscillations `delta_i(f)`.
//! - [`transport`]: total variation, exact L1-Wasserstein with primal and
//!   dual certificates, the coupling functional over product spaces,
//!   relative entropy, tilting, and log-moment-generating functions.
//! - [`mixing`]: Dobrushin contraction coefficients, the interdependence
//!   matrix and its uniqueness gate, the comparison series, conditional
//!   expectation kernels along the coordinate filtration, and randomized
//!   Wasserstein-matrix verification.
//! - [`gamma`]: the matrix constructors feeding the martingale bound
//!   `2 exp(-2 t^2 / ||Gamma delta(f)||^2)`.
//! - [`bounds`]: tail evaluators and inequality diagnostics.
//! - [`validate`]: exact tails, the single-site resampling kernel, seeded
//!   sampling, random instances, and the soundness harness.
//! - [`cli`]: JSON model/function documents, reports, and the command
//!   drivers behind the `depconc` binary.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod gamma;
pub mod linalg;
pub mod mixing;
pub mod model;
pub mod selftest;
pub mod transport;
pub mod validate;

pub use error::{Error, Result};

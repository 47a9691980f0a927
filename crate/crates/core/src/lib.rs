//! Finite-sample identification of fully observed linear systems.
//!
//! Simulate `x_{t+1} = A x_t + B u_t + w_t`, fit `[A B]` by least squares,
//! and compare the realised error against a priori bounds, data-dependent
//! confidence regions and a bootstrap estimate.

pub mod error;
pub mod bootstrap;
pub mod certificates;
pub mod cli;
pub mod estimators;
pub mod io;
pub mod linalg;
pub mod lti;
pub mod montecarlo;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};

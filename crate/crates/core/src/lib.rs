//! Online principal component analysis on perturbed spiked-covariance streams.
//!
//! * [`symmat`]: symmetric matrices, eigendecomposition, spectrahedron projection.
//! * [`stream_model`]: spiked-covariance streams with bounded perturbations.
//! * [`learners`]: nonconvex, rank-one and convex online gradient ascent.
//! * [`evaluation`]: regret ledgers.
//! * [`harness`]: configuration, replicated experiments and CSV reports.

pub mod error;
pub mod evaluation;
pub mod harness;
pub mod learners;
pub mod stream_model;
pub mod symmat;

pub use error::{Error, Result};

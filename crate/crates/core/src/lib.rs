//! Quantitative machinery for invariant circles of a family of perturbed
//! exact twist maps with constant-type rotation number.
//!
//! The crate is layered bottom-up:
//!
//! * [`number_theory`]: continued fractions and the dyadic kappa indexing.
//! * [`twist_map`]: the generating family and the induced area-preserving map.
//! * [`variational`]: Birkhoff periodic minimal configurations.
//! * [`chords`]: chord algebra, Type-I/Type-II classes, pairs and quadruples.
//! * [`distortion`]: the distortion hierarchy and criterion monitors.
//! * [`harness`]: configuration, orchestration, persistence and reports.

// `!(x > 0.0)` is deliberate: NaN must fail positivity checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chords;
pub mod distortion;
pub mod error;
pub mod harness;
mod linalg;
pub mod number_theory;
pub mod twist_map;
pub mod variational;

pub use error::{Error, Result};

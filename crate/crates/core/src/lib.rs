//! Lowest eigenvalue of the planar Schrödinger operator with an attractive
//! δ′-interaction supported on a closed curve.
//!
//! The crate contains the exact solution for a circle, parallel-coordinate
//! Rayleigh-quotient bounds for general curves, and an independent
//! finite-element solver over a mesh with duplicated interface nodes.

pub mod circle;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod parallel_bound;
pub mod quadrature;
pub mod special_functions;

pub use error::{Error, Result};

//! Ground states of N-Harmonium, the natural occupation numbers of their
//! one-body reduced density operators, and how close those occupation
//! numbers sit to the boundary of the generalized Pauli polytope.
//!
//! The pipeline runs `model` (configuration of occupied oscillator boxes)
//! → `kernel` (closed-form one-body kernel) → `spectral` (projection onto
//! Hermite functions and block diagonalization) → `gpc` (constraint
//! catalogs, distances, Q estimate). `analysis` holds the reference series,
//! exponent fits and parameter sweeps built on top of these.

pub mod analysis;
pub mod error;
pub mod gpc;
pub mod hermite;
pub mod kernel;
pub mod model;
pub mod spectral;

pub use error::{Error, Result};

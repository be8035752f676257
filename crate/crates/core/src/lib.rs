//! Numerical laboratory for the spectral convergence of graph Laplacians
//! built from random samples of the circle and the 2-sphere.

// Index loops over several parallel arrays read better in numerical code.
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod cli;
pub mod eigen;
pub mod error;
pub mod graph;
pub mod harness;
pub mod manifold;
pub mod quadrature;
pub mod rng;

pub use error::{LabError, Result};

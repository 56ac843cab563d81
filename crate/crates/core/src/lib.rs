//! Interference propagation in multi-RIS cellular downlinks.
//!
//! Spatial sampling, channel realizations, closed-form signal and
//! interference statistics, outage and SIS epidemic dynamics, and the Monte
//! Carlo harness that checks them against each other.

pub mod channel;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod interference;
pub mod mobility;
pub mod montecarlo;
pub mod outage;
pub mod power;
pub mod special;
pub mod stats;

pub use error::{Error, Result};

/// `f(0..n)` in order, evaluated in parallel when the `parallel` feature is on.
#[cfg(feature = "parallel")]
pub(crate) fn par_map<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

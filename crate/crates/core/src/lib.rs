//! Clustering of stationary processes observed in noise and with missing
//! samples, by comparing Blackman–Tukey PSD estimates.
//!
//! The pipeline is: [`spectra`] turns each observation into a PSD estimate,
//! [`dissimilarity`] compares estimates, [`cluster`] groups them, and
//! [`eval`] scores the result. [`genmodel`] produces synthetic data,
//! [`theory`] evaluates the analytic guarantees, and [`harness`] drives
//! configured experiments.

pub mod cluster;
pub mod dissimilarity;
pub mod error;
pub mod eval;
mod fft;
pub mod genmodel;
pub mod harness;
pub mod seed;
pub mod spectra;
pub mod theory;

pub use dissimilarity::{DistanceMatrix, Metric};
pub use error::{Error, Result};

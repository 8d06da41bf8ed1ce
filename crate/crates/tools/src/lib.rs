//! Command-line tooling, file formats and the Monte Carlo harness for the
//! mixed fractional Vasicek estimators in [`mfvasicek_core`].

pub mod cli;
pub mod io;
pub mod montecarlo;

pub use mfvasicek_core as core;

//! Federated multi-horizon forecasting core.
//!
//! Everything in this crate is pure computation over in-memory data and
//! builds without `std` (an allocator is required). File formats, synthetic
//! data generation and the experiment runner live in the `fedcast` crate.
//!
//! Module map:
//!
//! * [`series`]: time-series containers, alignment, supervised windowing
//!   and chronological splitting.
//! * [`clean`]: threshold outlier removal and short-gap interpolation.
//! * [`params`]: the flat parameter vector exchanged between clients and
//!   server, plus its binary serialization.
//! * [`model`]: seasonal-naive, linear and dense forecasters with losses,
//!   analytic gradients and a local SGD trainer.
//! * [`metrics`]: CV-RMSE, NMBE, rho-risk and ASHRAE-style compliance gates.
//! * [`federated`]: client updates, the six server strategies, round
//!   orchestration and a lossy transport simulator.
//! * [`climate`]: mixing ratio, mold isopleth, EN 15757 decomposition and
//!   the Pearson / Mann-Whitney statistics.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod clean;
pub mod climate;
mod error;
pub mod federated;
pub mod metrics;
pub mod model;
pub mod params;
pub mod rng;
pub mod series;

pub use error::{Error, Result};

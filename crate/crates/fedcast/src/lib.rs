//! IO, configuration and experiment orchestration around `fedcast-core`.

pub mod climate_report;
pub mod config;
pub mod csv_io;
pub mod error;
pub mod experiment;
pub mod synth;

pub use error::{AppError, AppResult};

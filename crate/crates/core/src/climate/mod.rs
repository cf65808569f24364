//! Conservation analytics for indoor climate records.

mod en15757;
mod psychro;
mod stats;

pub use en15757::{
    centered_moving_average, en15757_decompose, percentile, DecompositionOptions, SeasonalDecomposition,
};
pub use psychro::{lim1, mixing_ratio, ClimateSample, STANDARD_PRESSURE_HPA};
pub use stats::{
    mann_whitney_u, mann_whitney_u_asymptotic, mann_whitney_u_exact, pearson, MannWhitney, MwuMethod,
};

//! Seasonal/short-term decomposition of relative humidity (EN 15757).

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::series::TimeSeries;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecompositionOptions {
    pub window_days: usize,
    /// Percentiles (0..=100) bounding the short-term fluctuation band.
    pub band_percentiles: (f64, f64),
    /// A window with a larger share of missing hours has no CMA.
    pub max_missing_frac: f64,
}

impl Default for DecompositionOptions {
    fn default() -> Self {
        Self { window_days: 30, band_percentiles: (7.0, 93.0), max_missing_frac: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeasonalDecomposition {
    /// Mean of every present RH value.
    pub annual_mean_rh: Option<f64>,
    pub seasonal_cma: TimeSeries,
    /// `RH − CMA` wherever the CMA is defined.
    pub short_term_dev: TimeSeries,
    /// Lower and upper percentile of the defined deviations.
    pub band: Option<(f64, f64)>,
}

/// Centered moving average over `2·half + 1` slots.
///
/// The two end slots carry half weight, so the weights span exactly
/// `2·half` steps and a cycle whose period divides `2·half` averages out
/// completely. Missing slots are skipped; a window whose missing share
/// exceeds `max_missing_frac`, or which runs past either end, yields
/// `None`.
pub fn centered_moving_average(values: &[Option<f64>], half: usize, max_missing_frac: f64) -> Vec<Option<f64>> {
    let width = 2 * half + 1;
    let mut out = alloc::vec![None; values.len()];
    if values.len() < width {
        return out;
    }
    for center in half..values.len() - half {
        let window = &values[center - half..=center + half];
        let missing = window.iter().filter(|v| v.is_none()).count();
        if missing as f64 > max_missing_frac * width as f64 {
            continue;
        }
        // sum deviations from a reference so that a constant window is exact
        let Some(reference) = values[center].or_else(|| window.iter().flatten().copied().next()) else {
            continue;
        };
        let mut acc = 0.0;
        let mut weight = 0.0;
        for (k, v) in window.iter().enumerate() {
            if let Some(x) = v {
                let w = if half > 0 && (k == 0 || k == width - 1) { 0.5 } else { 1.0 };
                acc += w * (x - reference);
                weight += w;
            }
        }
        if weight > 0.0 {
            out[center] = Some(reference + acc / weight);
        }
    }
    out
}

/// Linear-interpolation percentile (`q` in 0..=100) of unsorted data.
pub fn percentile(data: &[f64], q: f64) -> Option<f64> {
    if data.is_empty() || !(0.0..=100.0).contains(&q) {
        return None;
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

/// Splits an hourly RH record into annual mean, seasonal cycle and
/// short-term deviations.
pub fn en15757_decompose(rh: &TimeSeries, opts: &DecompositionOptions) -> Result<SeasonalDecomposition> {
    if rh.step() != 3600 {
        return Err(Error::Invalid(format!("EN 15757 decomposition needs hourly data, step is {}s", rh.step())));
    }
    let (lo, hi) = opts.band_percentiles;
    if !(0.0..=100.0).contains(&lo) || !(0.0..=100.0).contains(&hi) || lo > hi {
        return Err(Error::Invalid(format!("band percentiles ({lo}, {hi}) are invalid")));
    }
    if opts.window_days == 0 {
        return Err(Error::Invalid("window_days must be at least 1".into()));
    }
    let half = 12 * opts.window_days;
    let needed = 2 * half + 1;
    if rh.len() < needed {
        return Err(Error::SeriesTooShort { len: rh.len(), needed });
    }

    let cma = centered_moving_average(rh.values(), half, opts.max_missing_frac);
    let deviations: Vec<Option<f64>> = rh
        .values()
        .iter()
        .zip(&cma)
        .map(|(v, c)| match (v, c) {
            (Some(v), Some(c)) => Some(v - c),
            _ => None,
        })
        .collect();
    let cma_defined: Vec<Option<f64>> = cma
        .iter()
        .zip(&deviations)
        .map(|(c, d)| d.and(*c))
        .collect();

    let defined: Vec<f64> = deviations.iter().flatten().copied().collect();
    let band = percentile(&defined, lo).zip(percentile(&defined, hi));
    let present: Vec<f64> = rh.values().iter().flatten().copied().collect();
    let annual_mean_rh = present.first().map(|&r| r + present.iter().map(|x| x - r).sum::<f64>() / present.len() as f64);

    Ok(SeasonalDecomposition {
        annual_mean_rh,
        seasonal_cma: rh.with_values(cma_defined)?,
        short_term_dev: rh.with_values(deviations)?,
        band,
    })
}

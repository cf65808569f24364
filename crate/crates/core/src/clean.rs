//! Threshold outlier removal and short-gap linear interpolation.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::series::TimeSeries;
use crate::{Error, Result};

/// Valid range and interpolation limit for one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CleaningPolicy {
    pub min_valid: f64,
    pub max_valid: f64,
    /// Longest missing run (in seconds) that is *not* filled; runs strictly
    /// shorter than this are interpolated.
    #[serde(default = "default_gap")]
    pub max_interp_gap: i64,
}

const fn default_gap() -> i64 {
    2 * 3600
}

impl CleaningPolicy {
    pub fn new(min_valid: f64, max_valid: f64) -> Self {
        Self { min_valid, max_valid, max_interp_gap: default_gap() }
    }

    /// Relative humidity in percent.
    pub fn relative_humidity() -> Self {
        Self::new(0.0, 100.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_valid < self.max_valid) {
            return Err(Error::Invalid(format!(
                "cleaning range [{}, {}] is empty",
                self.min_valid, self.max_valid
            )));
        }
        if self.max_interp_gap < 0 {
            return Err(Error::Invalid("max_interp_gap must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub outliers_removed: usize,
    pub points_interpolated: usize,
    pub gaps_retained: usize,
}

/// Drops out-of-range readings, then fills every interior missing run whose
/// duration (`run length × step`) is strictly below `max_interp_gap` on the
/// straight line between its flanking values. Runs touching either end are
/// never filled.
pub fn clean(series: &TimeSeries, policy: &CleaningPolicy) -> Result<(TimeSeries, CleaningReport)> {
    policy.validate()?;
    let mut report = CleaningReport::default();
    let mut values: Vec<Option<f64>> = series
        .values()
        .iter()
        .map(|v| match *v {
            Some(x) if x < policy.min_valid || x > policy.max_valid => {
                report.outliers_removed += 1;
                None
            }
            other => other,
        })
        .collect();

    let len = values.len();
    let mut i = 0;
    while i < len {
        if values[i].is_some() {
            i += 1;
            continue;
        }
        let run_start = i;
        while i < len && values[i].is_none() {
            i += 1;
        }
        let run_len = i - run_start;
        let interior = run_start > 0 && i < len;
        let short = (run_len as i64).saturating_mul(series.step()) < policy.max_interp_gap;
        if !(interior && short) {
            report.gaps_retained += 1;
            continue;
        }
        let (left, right) = match (values[run_start - 1], values[i]) {
            (Some(l), Some(r)) => (l, r),
            _ => unreachable!("run is flanked by present values"),
        };
        let span = (run_len + 1) as f64;
        for (k, slot) in values[run_start..i].iter_mut().enumerate() {
            let frac = (k + 1) as f64 / span;
            *slot = Some(left + (right - left) * frac);
        }
        report.points_interpolated += run_len;
    }

    Ok((series.with_values(values)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn hourly(values: Vec<Option<f64>>) -> TimeSeries {
        TimeSeries::new("x", 0, 3600, values).unwrap()
    }

    #[test]
    fn one_hour_gap_is_filled_at_midpoint() {
        let (out, rep) =
            clean(&hourly(vec![Some(10.0), None, Some(20.0)]), &CleaningPolicy::new(0.0, 50.0))
                .unwrap();
        assert_eq!(out.values(), &[Some(10.0), Some(15.0), Some(20.0)]);
        assert_eq!(rep, CleaningReport { outliers_removed: 0, points_interpolated: 1, gaps_retained: 0 });
    }

    #[test]
    fn two_hour_gap_is_retained() {
        let s = hourly(vec![Some(10.0), None, None, Some(20.0)]);
        let (out, rep) = clean(&s, &CleaningPolicy::new(0.0, 50.0)).unwrap();
        assert_eq!(out.values(), s.values());
        assert_eq!(rep.gaps_retained, 1);
    }

    #[test]
    fn outlier_becomes_missing() {
        let s = hourly(vec![Some(40.0), Some(150.0)]);
        let (out, rep) = clean(&s, &CleaningPolicy::relative_humidity()).unwrap();
        assert_eq!(out.values(), &[Some(40.0), None]);
        assert_eq!(rep.outliers_removed, 1);
        assert_eq!(rep.gaps_retained, 1);
    }

    #[test]
    fn outlier_inside_series_is_interpolated() {
        let s = hourly(vec![Some(40.0), Some(150.0), Some(60.0)]);
        let (out, rep) = clean(&s, &CleaningPolicy::relative_humidity()).unwrap();
        assert_eq!(out.values(), &[Some(40.0), Some(50.0), Some(60.0)]);
        assert_eq!((rep.outliers_removed, rep.points_interpolated), (1, 1));
    }

    #[test]
    fn edge_gaps_are_never_extrapolated() {
        let s = hourly(vec![None, Some(1.0), Some(2.0), None]);
        let (out, rep) = clean(&s, &CleaningPolicy::new(0.0, 5.0)).unwrap();
        assert_eq!(out.values(), s.values());
        assert_eq!(rep.gaps_retained, 2);
    }

    #[test]
    fn sub_hour_steps_use_duration() {
        // 30 s step, 200 missing = 6000 s < 7200 s
        let mut v = vec![Some(0.0)];
        v.extend(core::iter::repeat_n(None, 200));
        v.push(Some(201.0));
        let s = TimeSeries::new("x", 0, 30, v).unwrap();
        let (out, rep) = clean(&s, &CleaningPolicy::new(-1.0, 1000.0)).unwrap();
        assert_eq!(rep.points_interpolated, 200);
        assert_eq!(out.values()[100], Some(100.0));
    }

    #[test]
    fn invalid_policy() {
        let s = hourly(vec![Some(1.0)]);
        assert!(clean(&s, &CleaningPolicy::new(5.0, 5.0)).is_err());
        let p = CleaningPolicy { max_interp_gap: -1, ..CleaningPolicy::new(0.0, 1.0) };
        assert!(clean(&s, &p).is_err());
    }

    proptest! {
        #[test]
        fn present_in_range_values_survive_and_fills_are_linear(
            raw in proptest::collection::vec(proptest::option::weighted(0.7, -50.0f64..150.0), 1..60)
        ) {
            let s = hourly(raw.clone());
            let policy = CleaningPolicy::new(0.0, 100.0);
            let (out, _) = clean(&s, &policy).unwrap();
            let vals = out.values();
            for (i, v) in raw.iter().enumerate() {
                if let Some(x) = v {
                    if (0.0..=100.0).contains(x) {
                        prop_assert_eq!(vals[i], Some(*x));
                    }
                }
            }
            // every filled point lies on the chord between its flanking originals
            for i in 0..vals.len() {
                let was_valid = matches!(raw[i], Some(x) if (0.0..=100.0).contains(&x));
                if was_valid || vals[i].is_none() {
                    continue;
                }
                let l = (0..i).rev().find(|&j| vals[j].is_some() && matches!(raw[j], Some(x) if (0.0..=100.0).contains(&x))).unwrap();
                let r = (i + 1..vals.len()).find(|&j| matches!(raw[j], Some(x) if (0.0..=100.0).contains(&x))).unwrap();
                let (yl, yr) = (vals[l].unwrap(), vals[r].unwrap());
                let line = yl + (yr - yl) * (i - l) as f64 / (r - l) as f64;
                prop_assert!((vals[i].unwrap() - line).abs() <= 1e-12 * (1.0 + line.abs()));
            }
        }
    }
}

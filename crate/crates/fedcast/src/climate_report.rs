//! Indoor climate analysis: EN 15757 decomposition, mixing-ratio
//! comparison and mould-risk exceedance.

use std::fs;
use std::path::{Path, PathBuf};

use fedcast_core::climate::{
    centered_moving_average, en15757_decompose, lim1, mann_whitney_u, mixing_ratio, pearson, ClimateSample,
    DecompositionOptions, MannWhitney, STANDARD_PRESSURE_HPA,
};
use fedcast_core::series::{align, TimeSeries};
use serde::{Deserialize, Serialize};

use crate::csv_io::{format_time, read_long_csv};
use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClimateOptions {
    pub indoor_t: String,
    pub indoor_rh: String,
    pub outdoor_t: String,
    pub outdoor_rh: String,
    pub pressure_hpa: f64,
    /// Window of the centered moving average applied to mixing ratios.
    pub smoothing_days: usize,
    /// Share of hours with indoor MR above outdoor MR from which an
    /// internal moisture source is reported.
    pub internal_source_fraction: f64,
    pub decomposition: DecompositionOptions,
}

impl Default for ClimateOptions {
    fn default() -> Self {
        Self {
            indoor_t: "indoor_t".into(),
            indoor_rh: "indoor_rh".into(),
            outdoor_t: "outdoor_t".into(),
            outdoor_rh: "outdoor_rh".into(),
            pressure_hpa: STANDARD_PRESSURE_HPA,
            smoothing_days: 7,
            internal_source_fraction: 0.9,
            decomposition: DecompositionOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClimateSummary {
    pub hours: usize,
    /// Hours with indoor RH above `LIM_I(t)` over hours with both readings.
    pub lim1_exceedance_fraction: Option<f64>,
    pub annual_mean_rh: Option<f64>,
    pub fluctuation_band: Option<(f64, f64)>,
    pub indoor_above_outdoor_mr_fraction: Option<f64>,
    pub internal_moisture_source: bool,
    pub mr_pearson: Option<f64>,
    pub mr_mann_whitney: Option<MannWhitney>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClimateReport {
    pub summary: ClimateSummary,
    /// `timestamp, rh, cma, deviation`; absent when the record is shorter
    /// than one averaging window.
    pub decomposition_csv: Option<Vec<u8>>,
    pub mr_csv: Vec<u8>,
}

fn channel<'a>(series: &'a [TimeSeries], id: &str) -> AppResult<&'a TimeSeries> {
    series
        .iter()
        .find(|s| s.channel_id() == id)
        .ok_or_else(|| AppError::Data(format!("channel `{id}` not found in the climate inputs")))
}

fn fraction(hits: usize, total: usize) -> Option<f64> {
    (total > 0).then(|| hits as f64 / total as f64)
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Mixing ratio per hour; `None` where either input is missing.
fn mr_series(t: &TimeSeries, rh: &TimeSeries, pressure: f64) -> AppResult<Vec<Option<f64>>> {
    t.values()
        .iter()
        .zip(rh.values())
        .map(|(t, rh)| match (t, rh) {
            (Some(t), Some(rh)) => mixing_ratio(&ClimateSample::new(*t, *rh).with_pressure(pressure))
                .map(Some)
                .map_err(|e| AppError::core("mixing ratio", e)),
            _ => Ok(None),
        })
        .collect()
}

/// Analyses already loaded series. Indoor channels are required, outdoor
/// ones are optional.
pub fn climate_report(series: &[TimeSeries], opts: &ClimateOptions) -> AppResult<ClimateReport> {
    if opts.smoothing_days == 0 {
        return Err(AppError::Config("climate.smoothing_days: must be at least 1".into()));
    }
    let mut wanted = vec![channel(series, &opts.indoor_t)?.clone(), channel(series, &opts.indoor_rh)?.clone()];
    let has_outdoor = [&opts.outdoor_t, &opts.outdoor_rh].iter().all(|id| series.iter().any(|s| s.channel_id() == id.as_str()));
    if has_outdoor {
        wanted.push(channel(series, &opts.outdoor_t)?.clone());
        wanted.push(channel(series, &opts.outdoor_rh)?.clone());
    }
    let grid = align(&wanted, 3600).map_err(|e| AppError::core("climate inputs", e))?;
    let (t_in, rh_in) = (&grid[0], &grid[1]);
    let hours = t_in.len();

    let mut above = 0;
    let mut paired = 0;
    for (t, rh) in t_in.values().iter().zip(rh_in.values()) {
        if let (Some(t), Some(rh)) = (t, rh) {
            paired += 1;
            above += usize::from(*rh > lim1(*t));
        }
    }

    let decomposition = match en15757_decompose(rh_in, &opts.decomposition) {
        Ok(d) => Some(d),
        Err(fedcast_core::Error::SeriesTooShort { len, needed }) => {
            log::warn!("indoor RH has {len} hours, decomposition needs {needed}; skipped");
            None
        }
        Err(e) => return Err(AppError::core("decomposition", e)),
    };
    let decomposition_csv = decomposition.as_ref().map(|d| {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["timestamp", "rh", "cma", "deviation"]).expect("in-memory write");
        for i in 0..hours {
            w.write_record([
                format_time(rh_in.timestamp(i)),
                cell(rh_in.values()[i]),
                cell(d.seasonal_cma.values()[i]),
                cell(d.short_term_dev.values()[i]),
            ])
            .expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    });

    let half = 12 * opts.smoothing_days;
    let mr_in = mr_series(t_in, rh_in, opts.pressure_hpa)?;
    let mr_out = if has_outdoor { Some(mr_series(&grid[2], &grid[3], opts.pressure_hpa)?) } else { None };
    let smooth_in = centered_moving_average(&mr_in, half, opts.decomposition.max_missing_frac);
    let smooth_out = mr_out.as_ref().map(|m| centered_moving_average(m, half, opts.decomposition.max_missing_frac));

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["timestamp", "indoor_mr", "outdoor_mr", "indoor_mr_smoothed", "outdoor_mr_smoothed"])
        .expect("in-memory write");
    for i in 0..hours {
        let out = |v: &Option<Vec<Option<f64>>>| v.as_ref().and_then(|m| m[i]);
        w.write_record([
            format_time(t_in.timestamp(i)),
            cell(mr_in[i]),
            cell(out(&mr_out)),
            cell(smooth_in[i]),
            cell(out(&smooth_out)),
        ])
        .expect("in-memory write");
    }
    let mr_csv = w.into_inner().expect("in-memory flush");

    let (mut mr_above, mut mr_pairs) = (0, 0);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    if let Some(out) = &mr_out {
        for (a, b) in mr_in.iter().zip(out) {
            if let (Some(a), Some(b)) = (a, b) {
                mr_pairs += 1;
                mr_above += usize::from(a > b);
                xs.push(*a);
                ys.push(*b);
            }
        }
    }
    let above_fraction = fraction(mr_above, mr_pairs);
    let summary = ClimateSummary {
        hours,
        lim1_exceedance_fraction: fraction(above, paired),
        annual_mean_rh: decomposition.as_ref().and_then(|d| d.annual_mean_rh),
        fluctuation_band: decomposition.as_ref().and_then(|d| d.band),
        indoor_above_outdoor_mr_fraction: above_fraction,
        internal_moisture_source: above_fraction.is_some_and(|f| f >= opts.internal_source_fraction),
        mr_pearson: pearson(&xs, &ys).ok(),
        mr_mann_whitney: mann_whitney_u(&xs, &ys).ok(),
    };
    Ok(ClimateReport { summary, decomposition_csv, mr_csv })
}

/// Reads every CSV, runs [`climate_report`] and writes its files into `dir`.
pub fn climate_report_files(inputs: &[PathBuf], opts: &ClimateOptions, dir: &Path) -> AppResult<Vec<PathBuf>> {
    let mut series = Vec::new();
    for path in inputs {
        series.extend(read_long_csv(path)?);
    }
    let report = climate_report(&series, opts)?;
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let mut written = Vec::new();
    let mut emit = |name: &str, bytes: &[u8]| -> AppResult<()> {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| AppError::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    if let Some(csv) = &report.decomposition_csv {
        emit("decomposition.csv", csv)?;
    }
    emit("mr_comparison.csv", &report.mr_csv)?;
    let mut json = serde_json::to_vec_pretty(&report.summary).expect("summary serializes");
    json.push(b'\n');
    emit("climate_summary.json", &json)?;
    Ok(written)
}

//! Long-format sensor CSV: `TIME,UUID,VALUE`, one reading per row.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use fedcast_core::series::{TimeSeries, Timestamp};

use crate::error::{AppError, AppResult};

const HEADER: [&str; 3] = ["TIME", "UUID", "VALUE"];

/// Step assumed for a channel with a single reading.
pub const DEFAULT_STEP: i64 = 3600;

pub fn read_long_csv(path: &Path) -> AppResult<Vec<TimeSeries>> {
    let file = File::open(path).map_err(|e| AppError::io(path, e))?;
    read_long_csv_from(file, path)
}

/// Parses a long-format table. Rows may come in any order; the result has
/// one series per UUID, sorted by UUID, each on the grid given by its most
/// common sampling interval with holes marked missing.
pub fn read_long_csv_from(reader: impl Read, path: &Path) -> AppResult<Vec<TimeSeries>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).has_headers(true).from_reader(reader);
    let malformed = |line: u64, reason: String| AppError::MalformedRow { path: path.to_path_buf(), line, reason };

    let headers = rdr.headers().map_err(|e| malformed(1, e.to_string()))?;
    if headers.iter().ne(HEADER) {
        return Err(AppError::BadHeader { path: path.to_path_buf() });
    }

    // uuid -> time -> (value, line)
    let mut channels: BTreeMap<String, BTreeMap<Timestamp, (f64, u64)>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(malformed(line, format!("expected 3 columns, found {}", record.len())));
        }
        let time = parse_time(&record[0]).map_err(|r| malformed(line, r))?;
        let uuid = record[1].trim();
        if uuid.is_empty() {
            return Err(malformed(line, "empty UUID".into()));
        }
        let value: f64 = record[2]
            .trim()
            .parse()
            .map_err(|_| malformed(line, format!("unparsable value `{}`", &record[2])))?;
        if !value.is_finite() {
            return Err(malformed(line, format!("non-finite value `{}`", &record[2])));
        }
        let slot = channels.entry(uuid.to_string()).or_default();
        if slot.insert(time, (value, line)).is_some() {
            return Err(AppError::DuplicateKey {
                path: path.to_path_buf(),
                time: record[0].to_string(),
                uuid: uuid.to_string(),
            });
        }
    }

    channels
        .into_iter()
        .map(|(uuid, readings)| {
            let times: Vec<Timestamp> = readings.keys().copied().collect();
            let step = modal_step(&times).unwrap_or(DEFAULT_STEP);
            let start = times[0];
            let len = ((times[times.len() - 1] - start) / step + 1) as usize;
            let mut values = vec![None; len];
            for (t, (v, line)) in readings {
                if (t - start) % step != 0 {
                    return Err(malformed(line, format!("reading is off the {step}s grid of channel `{uuid}`")));
                }
                values[((t - start) / step) as usize] = Some(v);
            }
            TimeSeries::new(uuid.clone(), start, step, values).map_err(|e| AppError::core(uuid, e))
        })
        .collect()
}

fn parse_time(field: &str) -> Result<Timestamp, String> {
    let dt = DateTime::parse_from_rfc3339(field.trim())
        .map_err(|e| format!("unparsable timestamp `{field}`: {e}"))?;
    if dt.timestamp_subsec_nanos() != 0 {
        return Err(format!("timestamp `{field}` has sub-second precision"));
    }
    Ok(dt.timestamp())
}

/// Most frequent positive spacing; ties go to the smallest.
fn modal_step(sorted_times: &[Timestamp]) -> Option<i64> {
    let mut counts: HashMap<i64, usize> = HashMap::new();
    for pair in sorted_times.windows(2) {
        *counts.entry(pair[1] - pair[0]).or_default() += 1;
    }
    counts.into_iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0))).map(|(step, _)| step)
}

pub fn format_time(t: Timestamp) -> String {
    DateTime::<Utc>::from_timestamp(t, 0)
        .map(|dt| dt.to_rfc3339_opts(SecondsFormat::Secs, false))
        .unwrap_or_else(|| t.to_string())
}

/// Writes the present readings of every series in long format. Values use
/// the shortest decimal that parses back to the same `f64`.
pub fn write_long_csv_to(writer: impl Write, series: &[TimeSeries]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HEADER)?;
    for s in series {
        for (t, v) in s.present() {
            w.write_record([format_time(t), s.channel_id().to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_long_csv(path: &Path, series: &[TimeSeries]) -> AppResult<()> {
    let file = File::create(path).map_err(|e| AppError::io(path, e))?;
    write_long_csv_to(file, series).map_err(|e| AppError::Data(format!("{}: {e}", path.display())))
}

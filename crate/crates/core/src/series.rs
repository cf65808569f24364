//! Time-series containers, grid alignment and supervised windowing.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Seconds since the Unix epoch, UTC.
pub type Timestamp = i64;

/// A uniformly sampled channel. Missing readings are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    channel_id: String,
    start: Timestamp,
    step: i64,
    values: Vec<Option<f64>>,
}

impl TimeSeries {
    pub fn new(
        channel_id: impl Into<String>,
        start: Timestamp,
        step: i64,
        values: Vec<Option<f64>>,
    ) -> Result<Self> {
        if step <= 0 {
            return Err(Error::Invalid(format!("step must be positive, got {step}")));
        }
        if values.is_empty() {
            return Err(Error::Invalid("a series needs at least one value".into()));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("present values must be finite".into()));
        }
        Ok(Self { channel_id: channel_id.into(), start, step, values })
    }

    /// Builds a gap-free series.
    pub fn from_values(
        channel_id: impl Into<String>,
        start: Timestamp,
        step: i64,
        values: &[f64],
    ) -> Result<Self> {
        Self::new(channel_id, start, step, values.iter().map(|&v| Some(v)).collect())
    }

    pub fn channel_id(&self) -> &str {
        &self.channel_id
    }

    pub fn start(&self) -> Timestamp {
        self.start
    }

    pub fn step(&self) -> i64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn timestamp(&self, index: usize) -> Timestamp {
        self.start + index as i64 * self.step
    }

    /// Timestamp of the last slot.
    pub fn end(&self) -> Timestamp {
        self.timestamp(self.len() - 1)
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    /// Present values with their timestamps.
    pub fn present(&self) -> impl Iterator<Item = (Timestamp, f64)> + '_ {
        self.values.iter().enumerate().filter_map(|(i, v)| v.map(|v| (self.timestamp(i), v)))
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<Option<f64>>) -> Result<Self> {
        Self::new(self.channel_id.clone(), self.start, self.step, values)
    }

    pub fn rename(mut self, channel_id: impl Into<String>) -> Self {
        self.channel_id = channel_id.into();
        self
    }

    fn same_grid(&self, other: &TimeSeries) -> bool {
        self.start == other.start && self.step == other.step && self.len() == other.len()
    }
}

/// Resamples every series onto one shared grid of the given step.
///
/// The grid starts at the earliest start time floored to a multiple of
/// `step` and ends at the bucket holding the latest sample. Each bucket is
/// the arithmetic mean of the present values whose timestamps fall inside
/// it; buckets without any present value are missing.
pub fn align(series: &[TimeSeries], step: i64) -> Result<Vec<TimeSeries>> {
    if step <= 0 {
        return Err(Error::Invalid(format!("step must be positive, got {step}")));
    }
    let Some(first) = series.first() else {
        return Ok(Vec::new());
    };
    if let Some(s) = series.iter().find(|s| s.step > step) {
        return Err(Error::UpsampleUnsupported { target: step, native: s.step });
    }

    let earliest = series.iter().map(TimeSeries::start).min().unwrap_or(first.start);
    let latest = series.iter().map(TimeSeries::end).max().unwrap_or(first.end());
    let grid_start = earliest.div_euclid(step) * step;
    let len = ((latest - grid_start).div_euclid(step) + 1) as usize;

    series
        .iter()
        .map(|s| {
            let mut sums = vec![0.0_f64; len];
            let mut counts = vec![0_u32; len];
            for (t, v) in s.present() {
                let bucket = ((t - grid_start).div_euclid(step)) as usize;
                sums[bucket] += v;
                counts[bucket] += 1;
            }
            let values = sums
                .into_iter()
                .zip(counts)
                .map(|(sum, n)| (n > 0).then(|| sum / f64::from(n)))
                .collect();
            TimeSeries::new(s.channel_id.clone(), grid_start, step, values)
        })
        .collect()
}

/// Lookback/horizon layout of a forecasting task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    /// Lookback length `w` in steps.
    pub lookback: usize,
    /// Forecast horizon `h` in steps.
    pub horizon: usize,
    pub target: String,
    #[serde(default)]
    pub past_covariates: Vec<String>,
    #[serde(default)]
    pub future_covariates: Vec<String>,
}

impl WindowSpec {
    pub fn new(lookback: usize, horizon: usize, target: impl Into<String>) -> Self {
        Self {
            lookback,
            horizon,
            target: target.into(),
            past_covariates: Vec::new(),
            future_covariates: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lookback == 0 || self.horizon == 0 {
            return Err(Error::Invalid("lookback and horizon must be at least 1".into()));
        }
        if self.future_covariates.contains(&self.target) {
            return Err(Error::Invalid(format!(
                "target `{}` cannot also be a future covariate",
                self.target
            )));
        }
        Ok(())
    }
}

/// One supervised example anchored at a forecast origin.
///
/// Matrices are row-major with one row per time step: `xb_past` is
/// `lookback × k` and `xf_future` is `horizon × m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub origin: Timestamp,
    pub y_past: Vec<f64>,
    pub xb_past: Vec<f64>,
    pub xf_future: Vec<f64>,
    pub y_future: Vec<f64>,
}

/// Dimensions shared by every sample of a window set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputShape {
    pub lookback: usize,
    pub horizon: usize,
    pub past_covariates: usize,
    pub future_covariates: usize,
}

impl InputShape {
    /// Length of the flattened input `y_past ‖ xb ‖ xf`.
    pub fn flat_len(&self) -> usize {
        self.lookback * (1 + self.past_covariates) + self.horizon * self.future_covariates
    }
}

/// Samples built from aligned channels, ordered by origin.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedWindowSet {
    shape: InputShape,
    step: i64,
    samples: Vec<Sample>,
}

impl SupervisedWindowSet {
    /// Wraps samples, checking shapes, completeness and strict origin order.
    pub fn new(shape: InputShape, step: i64, samples: Vec<Sample>) -> Result<Self> {
        for s in &samples {
            check_sample_shape(&shape, s)?;
        }
        if samples.windows(2).any(|p| p[0].origin >= p[1].origin) {
            return Err(Error::Invalid("sample origins must be strictly increasing".into()));
        }
        Ok(Self { shape, step, samples })
    }

    /// Concatenates sets from several sources into one training pool.
    ///
    /// Origins from different sources may coincide, so the pooled set is
    /// ordered by source and then by origin rather than strictly by origin.
    pub fn pooled<'a>(sets: impl IntoIterator<Item = &'a SupervisedWindowSet>) -> Result<Self> {
        let mut iter = sets.into_iter();
        let first = iter.next().ok_or_else(|| Error::Invalid("nothing to pool".into()))?;
        let mut out = first.clone();
        for set in iter {
            if set.shape != out.shape || set.step != out.step {
                return Err(Error::Shape("pooled window sets differ in shape".into()));
            }
            out.samples.extend(set.samples.iter().cloned());
        }
        Ok(out)
    }

    pub fn shape(&self) -> InputShape {
        self.shape
    }

    pub fn step(&self) -> i64 {
        self.step
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn slice(&self, samples: &[Sample]) -> Self {
        Self { shape: self.shape, step: self.step, samples: samples.to_vec() }
    }
}

fn check_sample_shape(shape: &InputShape, s: &Sample) -> Result<()> {
    let ok = s.y_past.len() == shape.lookback
        && s.xb_past.len() == shape.lookback * shape.past_covariates
        && s.xf_future.len() == shape.horizon * shape.future_covariates
        && s.y_future.len() == shape.horizon;
    if !ok {
        return Err(Error::Shape(format!("sample at origin {} does not match {shape:?}", s.origin)));
    }
    let all = s.y_past.iter().chain(&s.xb_past).chain(&s.xf_future).chain(&s.y_future);
    if all.copied().any(|v| !v.is_finite()) {
        return Err(Error::Invalid(format!("sample at origin {} has a non-finite value", s.origin)));
    }
    Ok(())
}

/// Running count of missing slots: `prefix[i]` counts misses in `[0, i)`.
fn missing_prefix(series: &TimeSeries) -> Vec<usize> {
    let mut prefix = Vec::with_capacity(series.len() + 1);
    prefix.push(0);
    let mut acc = 0;
    for v in series.values() {
        acc += usize::from(v.is_none());
        prefix.push(acc);
    }
    prefix
}

/// Builds one sample per forecast origin whose every input and target slot
/// is present. Origins run from index `w - 1` to `L - h - 1`.
pub fn make_windows(channels: &[TimeSeries], spec: &WindowSpec) -> Result<SupervisedWindowSet> {
    spec.validate()?;
    let find = |id: &str| {
        channels
            .iter()
            .find(|c| c.channel_id() == id)
            .ok_or_else(|| Error::UnknownChannel(id.into()))
    };
    let target = find(&spec.target)?;
    let past = spec.past_covariates.iter().map(|id| find(id)).collect::<Result<Vec<_>>>()?;
    let future = spec.future_covariates.iter().map(|id| find(id)).collect::<Result<Vec<_>>>()?;
    if past.iter().chain(&future).any(|c| !c.same_grid(target)) {
        return Err(Error::NotAligned);
    }

    let (w, h) = (spec.lookback, spec.horizon);
    let shape = InputShape {
        lookback: w,
        horizon: h,
        past_covariates: past.len(),
        future_covariates: future.len(),
    };
    let len = target.len();
    if len < w + h {
        return SupervisedWindowSet::new(shape, target.step(), Vec::new());
    }

    let target_miss = missing_prefix(target);
    let past_miss: Vec<_> = past.iter().map(|c| missing_prefix(c)).collect();
    let future_miss: Vec<_> = future.iter().map(|c| missing_prefix(c)).collect();
    let clean = |prefix: &[usize], from: usize, to: usize| prefix[to] == prefix[from];
    let value = |c: &TimeSeries, i: usize| c.values()[i].unwrap_or(f64::NAN);

    let mut samples = Vec::with_capacity(len - w - h + 1);
    for t in (w - 1)..(len - h) {
        let lo = t + 1 - w;
        let complete = clean(&target_miss, lo, t + h + 1)
            && past_miss.iter().all(|p| clean(p, lo, t + 1))
            && future_miss.iter().all(|p| clean(p, t + 1, t + h + 1));
        if !complete {
            continue;
        }
        let y_past = (lo..=t).map(|i| value(target, i)).collect();
        let y_future = (t + 1..=t + h).map(|i| value(target, i)).collect();
        let mut xb_past = Vec::with_capacity(w * past.len());
        for i in lo..=t {
            xb_past.extend(past.iter().map(|c| value(c, i)));
        }
        let mut xf_future = Vec::with_capacity(h * future.len());
        for i in t + 1..=t + h {
            xf_future.extend(future.iter().map(|c| value(c, i)));
        }
        samples.push(Sample { origin: target.timestamp(t), y_past, xb_past, xf_future, y_future });
    }
    Ok(SupervisedWindowSet { shape, step: target.step(), samples })
}

/// Train/validation/test partition of a window set.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: SupervisedWindowSet,
    pub val: SupervisedWindowSet,
    pub test: SupervisedWindowSet,
}

/// Contiguous chronological split.
///
/// Cut points are `round(train_frac·n)` and `round((train_frac+val_frac)·n)`.
/// A sample stays in the earlier split only if its whole horizon ends
/// strictly before the first origin of the next split; the others are
/// dropped. The validation split may be empty only when `val_frac` is 0.
pub fn chronological_split(
    ws: &SupervisedWindowSet,
    train_frac: f64,
    val_frac: f64,
) -> Result<Split> {
    let valid = train_frac > 0.0 && val_frac >= 0.0 && train_frac + val_frac < 1.0;
    if !valid {
        return Err(Error::Invalid(format!(
            "split fractions {train_frac}/{val_frac} must satisfy 0 < train, 0 <= val, train + val < 1"
        )));
    }
    let n = ws.len() as f64;
    let train_end = libm::round(train_frac * n) as usize;
    let val_end = (libm::round((train_frac + val_frac) * n) as usize).clamp(train_end, ws.len());
    let samples = ws.samples();
    let (train, rest) = samples.split_at(train_end);
    let (val, test) = rest.split_at(val_end - train_end);

    let horizon_span = ws.shape.horizon as i64 * ws.step;
    let trim = |part: &[Sample], next_origin: Option<Timestamp>| -> Vec<Sample> {
        match next_origin {
            Some(o) => part.iter().filter(|s| s.origin + horizon_span < o).cloned().collect(),
            None => part.to_vec(),
        }
    };

    let first_origin = |part: &[Sample]| part.first().map(|s| s.origin);
    let train_next = first_origin(val).or_else(|| first_origin(test));
    let train = trim(train, train_next);
    let val = trim(val, first_origin(test));

    if train.is_empty() {
        return Err(Error::SplitTooSmall("train"));
    }
    if val.is_empty() && val_frac > 0.0 {
        return Err(Error::SplitTooSmall("validation"));
    }
    if test.is_empty() {
        return Err(Error::SplitTooSmall("test"));
    }
    Ok(Split { train: ws.slice(&train), val: ws.slice(&val), test: ws.slice(test) })
}

//! Seeded synthetic building data.
//!
//! Each channel is `mean + daily + weekly + noise`, hourly, with optional
//! AR(1) noise, hour-of-day dependent noise spread and, for CO2 channels,
//! rectangular occupancy blocks inside the opening hours. Channel `k` draws
//! from ChaCha8 stream `k` of the spec seed, so adding a channel never
//! changes the ones before it.

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use fedcast_core::rng::stream_rng;
use fedcast_core::series::{TimeSeries, Timestamp};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

/// 2024-01-01T00:00:00Z.
pub const DEFAULT_START: Timestamp = 1_704_067_200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Temperature,
    Rh,
    Co2,
    Energy,
}

impl ChannelKind {
    pub fn default_mean(self) -> f64 {
        match self {
            ChannelKind::Temperature => 21.0,
            ChannelKind::Rh => 45.0,
            ChannelKind::Co2 => 450.0,
            ChannelKind::Energy => 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub id: String,
    pub kind: ChannelKind,
    /// Overrides the kind's default level.
    #[serde(default)]
    pub mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub days: usize,
    pub seed: u64,
    #[serde(default = "default_start")]
    pub start: Timestamp,
    pub channels: Vec<ChannelSpec>,
    #[serde(default)]
    pub daily_amp: f64,
    #[serde(default)]
    pub weekly_amp: f64,
    #[serde(default)]
    pub noise_sd: f64,
    /// AR(1) coefficient of the noise, `|φ| < 1`; 0 gives white noise.
    #[serde(default)]
    pub ar_coef: f64,
    /// Noise spread is scaled by `1 + k·sin(2π·hour/24)`, `0 ≤ k < 1`.
    #[serde(default)]
    pub heteroskedastic: f64,
    #[serde(default)]
    pub occupancy_spikes: bool,
    /// Daily opening window `[open, close)` in hours since midnight.
    #[serde(default = "default_opening")]
    pub opening_hours: (u32, u32),
    #[serde(default = "default_spike_height")]
    pub spike_height: f64,
}

fn default_start() -> Timestamp {
    DEFAULT_START
}

fn default_opening() -> (u32, u32) {
    (8, 18)
}

fn default_spike_height() -> f64 {
    400.0
}

impl SyntheticSpec {
    /// One channel with every optional component switched off.
    pub fn new(days: usize, seed: u64, channels: Vec<ChannelSpec>) -> Self {
        Self {
            days,
            seed,
            start: DEFAULT_START,
            channels,
            daily_amp: 0.0,
            weekly_amp: 0.0,
            noise_sd: 0.0,
            ar_coef: 0.0,
            heteroskedastic: 0.0,
            occupancy_spikes: false,
            opening_hours: default_opening(),
            spike_height: default_spike_height(),
        }
    }

    pub fn validate(&self) -> AppResult<()> {
        let bad = |field: &str, why: String| Err(AppError::Config(format!("synthetic.{field}: {why}")));
        if self.days < 1 {
            return bad("days", "must be at least 1".into());
        }
        if self.weekly_amp != 0.0 && self.days < 8 {
            return bad("days", format!("{} days cannot hold a full weekly period", self.days));
        }
        if self.channels.is_empty() {
            return bad("channels", "at least one channel is required".into());
        }
        let mut ids = BTreeSet::new();
        for c in &self.channels {
            if !ids.insert(c.id.as_str()) {
                return bad("channels", format!("duplicate id `{}`", c.id));
            }
            if c.mean.is_some_and(|m| !m.is_finite()) {
                return bad("channels", format!("mean of `{}` is not finite", c.id));
            }
        }
        for (name, v) in [("daily_amp", self.daily_amp), ("weekly_amp", self.weekly_amp), ("spike_height", self.spike_height)] {
            if !v.is_finite() {
                return bad(name, format!("{v} is not finite"));
            }
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return bad("noise_sd", format!("{} must be finite and non-negative", self.noise_sd));
        }
        if !(self.ar_coef.abs() < 1.0) {
            return bad("ar_coef", format!("{} must lie in (-1, 1)", self.ar_coef));
        }
        if !(0.0..1.0).contains(&self.heteroskedastic) {
            return bad("heteroskedastic", format!("{} must lie in [0, 1)", self.heteroskedastic));
        }
        let (open, close) = self.opening_hours;
        if open >= close || close > 24 {
            return bad("opening_hours", format!("({open}, {close}) is not a window within a day"));
        }
        Ok(())
    }
}

/// Hourly series of length `24·days`, one per configured channel.
pub fn synthesize(spec: &SyntheticSpec) -> AppResult<Vec<TimeSeries>> {
    spec.validate()?;
    let len = 24 * spec.days;
    spec.channels
        .iter()
        .enumerate()
        .map(|(k, ch)| {
            let mut rng = stream_rng(spec.seed, k as u64);
            let mean = ch.mean.unwrap_or(ch.kind.default_mean());
            let phi = spec.ar_coef;
            let stationary = 1.0 / (1.0 - phi * phi).sqrt();
            let mut noise = 0.0;
            let mut values: Vec<f64> = (0..len)
                .map(|i| {
                    let hour = i as f64;
                    let spread = 1.0 + spec.heteroskedastic * (TAU * hour / 24.0).sin();
                    let z: f64 = rng.sample(StandardNormal);
                    let shock = spec.noise_sd * spread * z;
                    noise = if i == 0 { shock * stationary } else { phi * noise + shock };
                    mean + spec.daily_amp * (TAU * hour / 24.0).sin()
                        + spec.weekly_amp * (TAU * hour / 168.0).sin()
                        + noise
                })
                .collect();
            if spec.occupancy_spikes && ch.kind == ChannelKind::Co2 {
                let mut occ = stream_rng(spec.seed, (1 << 32) + k as u64);
                add_occupancy(&mut values, spec, &mut occ);
            }
            TimeSeries::from_values(ch.id.clone(), spec.start, 3600, &values)
                .map_err(|e| AppError::core(format!("synthetic channel `{}`", ch.id), e))
        })
        .collect()
}

/// One rectangular block per day, starting at a random opening hour and
/// lasting one to three hours, with a height drawn around `spike_height`.
fn add_occupancy(values: &mut [f64], spec: &SyntheticSpec, rng: &mut impl Rng) {
    let (open, close) = spec.opening_hours;
    let day_offset = spec.start.rem_euclid(86_400) / 3600;
    for day in 0..spec.days {
        let begin = rng.random_range(open..close) as i64;
        let duration = rng.random_range(1..=3);
        let height = spec.spike_height * rng.random_range(0.5..1.5);
        for h in begin..(begin + duration).min(close as i64) {
            let idx = day as i64 * 24 + h - day_offset;
            if let Some(v) = usize::try_from(idx).ok().and_then(|i| values.get_mut(i)) {
                *v += height;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(kind: ChannelKind) -> Vec<ChannelSpec> {
        vec![ChannelSpec { id: "c".into(), kind, mean: None }]
    }

    #[test]
    fn flat_spec_is_constant() {
        let s = synthesize(&SyntheticSpec::new(3, 1, one(ChannelKind::Rh))).unwrap();
        assert_eq!(s[0].len(), 72);
        assert!(s[0].values().iter().all(|v| *v == Some(45.0)));
    }

    #[test]
    fn noise_free_daily_cycle_is_24_periodic() {
        let spec = SyntheticSpec { daily_amp: 5.0, ..SyntheticSpec::new(10, 3, one(ChannelKind::Energy)) };
        let v: Vec<f64> = synthesize(&spec).unwrap()[0].values().iter().flatten().copied().collect();
        for i in 24..v.len() {
            assert!((v[i] - v[i - 24]).abs() < 1e-12);
        }
    }

    #[test]
    fn seeded_and_stream_separated() {
        let mut spec = SyntheticSpec {
            noise_sd: 1.0,
            ar_coef: 0.5,
            occupancy_spikes: true,
            ..SyntheticSpec::new(9, 42, one(ChannelKind::Co2))
        };
        let a = synthesize(&spec).unwrap();
        assert_eq!(a, synthesize(&spec).unwrap());
        spec.channels.push(ChannelSpec { id: "d".into(), kind: ChannelKind::Temperature, mean: Some(19.0) });
        let b = synthesize(&spec).unwrap();
        assert_eq!(a[0], b[0]);
        spec.seed = 43;
        assert_ne!(a[0], synthesize(&spec).unwrap()[0]);
    }

    #[test]
    fn occupancy_lands_in_opening_hours() {
        let spec = SyntheticSpec { occupancy_spikes: true, ..SyntheticSpec::new(5, 7, one(ChannelKind::Co2)) };
        let s = &synthesize(&spec).unwrap()[0];
        let mut raised = 0;
        for (i, v) in s.values().iter().enumerate() {
            let v = v.unwrap();
            if v > 450.0 {
                raised += 1;
                assert!((8..18).contains(&(i % 24)), "hour {}", i % 24);
            }
        }
        assert!((5..=15).contains(&raised));
    }

    #[test]
    fn validation() {
        assert!(synthesize(&SyntheticSpec::new(0, 1, one(ChannelKind::Rh))).is_err());
        let weekly = SyntheticSpec { weekly_amp: 1.0, ..SyntheticSpec::new(7, 1, one(ChannelKind::Rh)) };
        assert!(matches!(synthesize(&weekly), Err(AppError::Config(_))));
        assert!(synthesize(&SyntheticSpec { days: 8, ..weekly }).is_ok());
        assert!(synthesize(&SyntheticSpec { ar_coef: 1.0, ..SyntheticSpec::new(2, 1, one(ChannelKind::Rh)) }).is_err());
        assert!(synthesize(&SyntheticSpec::new(2, 1, vec![])).is_err());
    }
}

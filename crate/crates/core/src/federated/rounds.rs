use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{client_update, ClientHandle, ClientUpdate, ServerStrategy, StrategyKind, Transport};
use crate::metrics::{cv_rmse, nmbe};
use crate::model::TrainConfig;
use crate::params::ParamVector;
use crate::rng::stream_rng;
use crate::{Error, Result};

/// Server state between communication rounds.
#[derive(Debug, Clone)]
pub struct FedRoundState {
    global: ParamVector,
    round: usize,
    strategy: ServerStrategy,
    sample_fraction: f64,
    rng_seed: u64,
}

impl FedRoundState {
    pub fn new(init: ParamVector, strategy: ServerStrategy, sample_fraction: f64, rng_seed: u64) -> Result<Self> {
        if !(sample_fraction > 0.0 && sample_fraction <= 1.0) {
            return Err(Error::Invalid(format!("sample fraction {sample_fraction} is outside (0, 1]")));
        }
        Ok(Self { global: init, round: 0, strategy, sample_fraction, rng_seed })
    }

    pub fn global(&self) -> &ParamVector {
        &self.global
    }

    /// Number of completed rounds `t`.
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn strategy(&self) -> &ServerStrategy {
        &self.strategy
    }

    pub fn sample_fraction(&self) -> f64 {
        self.sample_fraction
    }

    /// `⌈C·N⌉` clients drawn uniformly without replacement for the current
    /// round, returned in client-id order.
    fn sample_clients<'c>(&self, clients: &'c [ClientHandle]) -> Vec<&'c ClientHandle> {
        let n = clients.len();
        let k = (libm::ceil(self.sample_fraction * n as f64) as usize).clamp(1, n);
        let mut picked: Vec<&ClientHandle> = if k == n {
            clients.iter().collect()
        } else {
            let mut rng = stream_rng(self.rng_seed, self.round as u64);
            rand::seq::index::sample(&mut rng, n, k).into_iter().map(|i| &clients[i]).collect()
        };
        picked.sort_by(|a, b| a.id().cmp(b.id()));
        picked
    }
}

/// One row of the round log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub strategy: StrategyKind,
    /// Updates that reached the server.
    pub participants: usize,
    pub dropped: usize,
    pub global_val_cv_rmse: Option<f64>,
    pub global_val_nmbe: Option<f64>,
    pub wall_ms: u64,
}

impl RoundRecord {
    pub fn skipped(&self) -> bool {
        self.participants == 0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub rows: Vec<RoundRecord>,
}

/// Optional knobs of [`run_rounds_with`].
#[derive(Default)]
pub struct RoundOptions<'a> {
    /// Lossy uplink for client updates.
    pub transport: Option<Transport>,
    /// Millisecond clock for the `wall_ms` column; without one it stays 0.
    pub clock: Option<&'a dyn Fn() -> u64>,
    /// Skip the per-round validation pass.
    pub skip_validation: bool,
}

/// Runs `rounds` communication rounds over a lossless network.
pub fn run_rounds(
    state: &mut FedRoundState,
    clients: &[ClientHandle],
    rounds: usize,
    cfg: &TrainConfig,
) -> Result<(ParamVector, RoundLog)> {
    run_rounds_with(state, clients, rounds, cfg, &mut RoundOptions::default())
}

/// Runs `rounds` communication rounds.
///
/// Each round samples clients, trains every sampled client from the current
/// global parameters with [`TrainConfig::for_round`], passes the updates
/// through the transport and aggregates whatever arrives. A round in which
/// every update is lost leaves the global parameters and moments untouched.
pub fn run_rounds_with(
    state: &mut FedRoundState,
    clients: &[ClientHandle],
    rounds: usize,
    cfg: &TrainConfig,
    opts: &mut RoundOptions<'_>,
) -> Result<(ParamVector, RoundLog)> {
    if rounds == 0 {
        return Err(Error::Invalid("at least one round is required".into()));
    }
    if clients.is_empty() {
        return Err(Error::Invalid("at least one client is required".into()));
    }
    cfg.validate()?;

    let mut log = RoundLog::default();
    for _ in 0..rounds {
        let t = state.round;
        let tag = |e: Error| Error::InRound { round: t, source: Box::new(e) };
        let started = opts.clock.map(|c| c());

        let round_cfg = cfg.for_round(t);
        let sampled = state.sample_clients(clients);
        let mut updates: Vec<ClientUpdate> = Vec::with_capacity(sampled.len());
        let mut dropped = 0;
        for client in &sampled {
            let update = client_update(client, &state.global, &round_cfg).map_err(tag)?;
            match opts.transport.as_mut().map_or(Some(update.clone()), |tr| tr.transmit(update).into_option()) {
                Some(u) => updates.push(u),
                None => dropped += 1,
            }
        }

        if updates.is_empty() {
            log::warn!("round {t}: all {dropped} client updates were lost; skipping aggregation");
        } else {
            state.global = state.strategy.aggregate(&updates, &state.global).map_err(tag)?;
        }
        state.round += 1;

        let (cv, bias) = if opts.skip_validation {
            (None, None)
        } else {
            global_validation(clients, &state.global).map_err(tag)?
        };
        let wall_ms = match (opts.clock, started) {
            (Some(c), Some(s)) => c().saturating_sub(s),
            _ => 0,
        };
        log.rows.push(RoundRecord {
            round: t,
            strategy: state.strategy.kind(),
            participants: updates.len(),
            dropped,
            global_val_cv_rmse: cv,
            global_val_nmbe: bias,
            wall_ms,
        });
    }
    Ok((state.global.clone(), log))
}

/// Pools every client's validation forecasts of `theta` and scores them.
fn global_validation(clients: &[ClientHandle], theta: &ParamVector) -> Result<(Option<f64>, Option<f64>)> {
    let mut point = Vec::new();
    let mut truth = Vec::new();
    for c in clients {
        if let Some(f) = c.validation_forecast(theta)? {
            point.extend(f.point);
            truth.extend(f.truth);
        }
    }
    if truth.is_empty() {
        return Ok((None, None));
    }
    Ok((cv_rmse(&point, &truth).ok(), nmbe(&point, &truth).ok()))
}

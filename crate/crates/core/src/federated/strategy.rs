use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::ClientUpdate;
use crate::params::ParamVector;
use crate::{Error, Result};

/// Server-side aggregation algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    FedAvg,
    FedMedian,
    FedAvgM,
    FedAdam,
    FedAdagrad,
    FedYogi,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 6] = [
        StrategyKind::FedAvg,
        StrategyKind::FedMedian,
        StrategyKind::FedAvgM,
        StrategyKind::FedAdam,
        StrategyKind::FedAdagrad,
        StrategyKind::FedYogi,
    ];

    pub fn is_adaptive(self) -> bool {
        matches!(self, StrategyKind::FedAdam | StrategyKind::FedAdagrad | StrategyKind::FedYogi)
    }

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::FedAvg => "fedavg",
            StrategyKind::FedMedian => "fedmedian",
            StrategyKind::FedAvgM => "fedavgm",
            StrategyKind::FedAdam => "fedadam",
            StrategyKind::FedAdagrad => "fedadagrad",
            StrategyKind::FedYogi => "fedyogi",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Hyperparameters of a server strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyParams {
    /// Server learning rate.
    pub eta_s: f64,
    /// FedAvgM momentum.
    pub beta: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Adaptivity floor added to `√v`.
    pub tau: f64,
}

impl StrategyParams {
    /// `η_s = 0.1` for the adaptive strategies and 1 otherwise;
    /// `β = β1 = 0.9`, `β2 = 0.99`, `τ = 1e-3`.
    pub fn defaults_for(kind: StrategyKind) -> Self {
        Self {
            eta_s: if kind.is_adaptive() { 0.1 } else { 1.0 },
            beta: 0.9,
            beta1: 0.9,
            beta2: 0.99,
            tau: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..1.0).contains(&x);
        if !(self.eta_s > 0.0 && self.eta_s.is_finite()) {
            return Err(Error::Invalid(format!("eta_s must be positive, got {}", self.eta_s)));
        }
        if !(unit(self.beta) && unit(self.beta1) && unit(self.beta2)) {
            return Err(Error::Invalid("beta, beta1 and beta2 must lie in [0, 1)".into()));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Invalid(format!("tau must be positive, got {}", self.tau)));
        }
        Ok(())
    }
}

/// A server strategy together with its optimizer moments.
///
/// Every strategy applies its step *along* the aggregated client delta, so
/// FedAvg with `η_s = 1` lands exactly on the weighted average of the
/// client models.
#[derive(Debug, Clone, PartialEq)]
pub struct ServerStrategy {
    kind: StrategyKind,
    params: StrategyParams,
    m: Option<ParamVector>,
    v: Option<ParamVector>,
}

impl ServerStrategy {
    pub fn new(kind: StrategyKind) -> Self {
        Self { kind, params: StrategyParams::defaults_for(kind), m: None, v: None }
    }

    pub fn with_params(kind: StrategyKind, params: StrategyParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { kind, params, m: None, v: None })
    }

    pub fn kind(&self) -> StrategyKind {
        self.kind
    }

    pub fn params(&self) -> &StrategyParams {
        &self.params
    }

    /// First moment (momentum buffer for FedAvgM); `None` before the first round.
    pub fn m(&self) -> Option<&ParamVector> {
        self.m.as_ref()
    }

    /// Second moment of the adaptive strategies.
    pub fn v(&self) -> Option<&ParamVector> {
        self.v.as_ref()
    }

    /// Computes `θ^{t+1}` from the client updates and advances the moments.
    ///
    /// Updates are ordered by client id first so the result does not depend
    /// on arrival order.
    pub fn aggregate(&mut self, updates: &[ClientUpdate], theta: &ParamVector) -> Result<ParamVector> {
        if updates.is_empty() {
            return Err(Error::NoParticipants);
        }
        for u in updates {
            theta.check_layout(&u.delta)?;
        }
        let mut sorted: Vec<&ClientUpdate> = updates.iter().collect();
        sorted.sort_by(|a, b| a.client_id.cmp(&b.client_id));

        let StrategyParams { eta_s, beta, beta1, beta2, tau } = self.params;

        if self.kind == StrategyKind::FedMedian {
            let deltas: Vec<&ParamVector> = sorted.iter().map(|u| &u.delta).collect();
            let median = ParamVector::median(&deltas)?;
            return theta.zip_with(&median, |t, d| t + eta_s * d);
        }

        let mean_delta = weighted_mean(&sorted, theta)?;
        match self.kind {
            StrategyKind::FedAvg => theta.zip_with(&mean_delta, |t, d| t + eta_s * d),
            StrategyKind::FedAvgM => {
                let m = self.moment_m(theta)?.zip_with(&mean_delta, |m, d| beta * m + d)?;
                let next = theta.zip_with(&m, |t, m| t + eta_s * m)?;
                self.m = Some(m);
                Ok(next)
            }
            StrategyKind::FedAdam | StrategyKind::FedAdagrad | StrategyKind::FedYogi => {
                let m = self.moment_m(theta)?.zip_with(&mean_delta, |m, d| beta1 * m + (1.0 - beta1) * d)?;
                let v_prev = self.moment_v(theta)?;
                let v = match self.kind {
                    StrategyKind::FedAdam => v_prev.zip_with(&mean_delta, |v, d| beta2 * v + (1.0 - beta2) * d * d)?,
                    StrategyKind::FedAdagrad => v_prev.zip_with(&mean_delta, |v, d| v + d * d)?,
                    _ => v_prev.zip_with(&mean_delta, |v, d| {
                        let d2 = d * d;
                        v - (1.0 - beta2) * d2 * sign(v - d2)
                    })?,
                };
                let step = m.zip_with(&v, |m, v| eta_s * m / (libm::sqrt(v) + tau))?;
                let next = theta.add(&step)?;
                self.m = Some(m);
                self.v = Some(v);
                Ok(next)
            }
            StrategyKind::FedMedian => unreachable!("handled above"),
        }
    }

    fn moment_m(&self, theta: &ParamVector) -> Result<ParamVector> {
        Self::moment_or_zero(&self.m, theta)
    }

    fn moment_v(&self, theta: &ParamVector) -> Result<ParamVector> {
        Self::moment_or_zero(&self.v, theta)
    }

    fn moment_or_zero(moment: &Option<ParamVector>, theta: &ParamVector) -> Result<ParamVector> {
        match moment {
            Some(m) => {
                theta.check_layout(m)?;
                Ok(m.clone())
            }
            None => Ok(theta.zeros_like()),
        }
    }
}

/// `Σ (|D_i| / n) · δ_i` with `n = Σ |D_i|`.
fn weighted_mean(updates: &[&ClientUpdate], theta: &ParamVector) -> Result<ParamVector> {
    let n: usize = updates.iter().map(|u| u.size).sum();
    if n == 0 {
        return Err(Error::Invalid("client updates carry no samples".into()));
    }
    let mut acc = alloc::vec![0.0; theta.len()];
    for u in updates {
        let w = u.size as f64 / n as f64;
        acc.iter_mut().zip(u.delta.values()).for_each(|(a, d)| *a += w * d);
    }
    ParamVector::new(theta.layout().clone(), acc)
}

/// Sign with `sign(0) = 0`.
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Free-function form of [`ServerStrategy::aggregate`].
pub fn aggregate(updates: &[ClientUpdate], strategy: &mut ServerStrategy, theta: &ParamVector) -> Result<ParamVector> {
    strategy.aggregate(updates, theta)
}

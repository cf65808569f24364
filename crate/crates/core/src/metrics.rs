//! Forecast accuracy metrics and ASHRAE Guideline 14 style acceptance gates.
//!
//! All normalized metrics divide by the mean (or sum) of the actual values
//! and refuse a non-positive denominator: energy and indoor-climate targets
//! are positive-valued, and a sign flip would silently invert the meaning
//! of NMBE.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::model::{pinball, ForecastModel};
use crate::params::ParamVector;
use crate::series::SupervisedWindowSet;
use crate::{Error, Result};

fn check_pair(pred: &[f64], truth: &[f64]) -> Result<()> {
    if pred.len() != truth.len() || truth.is_empty() {
        return Err(Error::Shape(format!(
            "metric needs equal non-empty vectors, got {} and {}",
            pred.len(),
            truth.len()
        )));
    }
    Ok(())
}

fn positive_mean(truth: &[f64]) -> Result<f64> {
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    if mean > 0.0 {
        Ok(mean)
    } else {
        Err(Error::UndefinedNormalization)
    }
}

/// `100 · RMSE / ȳ`, in percent.
pub fn cv_rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred, truth)?;
    let mean = positive_mean(truth)?;
    let mse = pred.iter().zip(truth).map(|(p, y)| (p - y) * (p - y)).sum::<f64>() / truth.len() as f64;
    Ok(100.0 * libm::sqrt(mse) / mean)
}

/// `100 · MBE / ȳ`, in percent. Positive means overestimation.
pub fn nmbe(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred, truth)?;
    let mean = positive_mean(truth)?;
    let mbe = pred.iter().zip(truth).map(|(p, y)| p - y).sum::<f64>() / truth.len() as f64;
    Ok(100.0 * mbe / mean)
}

/// `2 · Σ ℓ(ŷ, y, p) / Σ y` for forecasts of the `p`-th quantile.
pub fn rho_risk(pred_q: &[f64], truth: &[f64], p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidQuantile(p));
    }
    check_pair(pred_q, truth)?;
    let total: f64 = truth.iter().sum();
    if !(total > 0.0) {
        return Err(Error::UndefinedNormalization);
    }
    let loss: f64 = pred_q.iter().zip(truth).map(|(&yhat, &y)| pinball(yhat, y, p)).sum();
    Ok(2.0 * loss / total)
}

/// Which acceptance thresholds apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    WholeBuildingEnergy,
    IndoorTRh,
    Co2,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::WholeBuildingEnergy, Task::IndoorTRh, Task::Co2];

    /// `(max CV-RMSE %, max |NMBE| %)`.
    pub fn thresholds(self) -> (f64, f64) {
        match self {
            Task::WholeBuildingEnergy | Task::Co2 => (30.0, 10.0),
            Task::IndoorTRh => (20.0, 5.0),
        }
    }
}

/// True iff CV-RMSE and |NMBE| are both within the task's bounds
/// (boundary values pass).
pub fn compliance(cv_rmse_pct: f64, nmbe_pct: f64, task: Task) -> bool {
    let (cv_max, nmbe_max) = task.thresholds();
    cv_rmse_pct <= cv_max && nmbe_pct.abs() <= nmbe_max
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Compliance {
    pub whole_building: bool,
    pub indoor_t_rh: bool,
    pub co2: bool,
}

impl Compliance {
    pub fn evaluate(cv_rmse_pct: f64, nmbe_pct: f64) -> Self {
        Self {
            whole_building: compliance(cv_rmse_pct, nmbe_pct, Task::WholeBuildingEnergy),
            indoor_t_rh: compliance(cv_rmse_pct, nmbe_pct, Task::IndoorTRh),
            co2: compliance(cv_rmse_pct, nmbe_pct, Task::Co2),
        }
    }

    pub fn for_task(&self, task: Task) -> bool {
        match task {
            Task::WholeBuildingEnergy => self.whole_building,
            Task::IndoorTRh => self.indoor_t_rh,
            Task::Co2 => self.co2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileRisk {
    pub p: f64,
    pub rho_risk: f64,
}

/// Metrics of one horizon step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub step: usize,
    pub cv_rmse_pct: f64,
    pub nmbe_pct: f64,
}

/// Evaluation of one model on one test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub cv_rmse_pct: f64,
    pub nmbe_pct: f64,
    pub rho_risk: Vec<QuantileRisk>,
    pub n_points: usize,
    pub compliance: Compliance,
    /// Share of (sample, step) rows whose quantile forecasts are not
    /// non-decreasing in the level; quantile models only.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub quantile_crossing_rate: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub per_step: Vec<StepMetrics>,
}

/// Predictions of a model over a window set, pooled over (sample, step).
#[derive(Debug, Clone, PartialEq)]
pub struct PooledForecast {
    /// Point forecast (the central quantile for quantile models).
    pub point: Vec<f64>,
    pub truth: Vec<f64>,
    /// One column per quantile level, aligned with `truth`.
    pub quantiles: Vec<Vec<f64>>,
    pub crossings: usize,
    pub horizon: usize,
}

pub fn pool_forecasts(model: &ForecastModel, params: &ParamVector, ws: &SupervisedWindowSet) -> Result<PooledForecast> {
    let q = model.outputs_per_step();
    let central = model.quantiles().map_or(0, |l| l.central_index());
    let n = ws.len() * ws.shape().horizon;
    let mut out = PooledForecast {
        point: Vec::with_capacity(n),
        truth: Vec::with_capacity(n),
        quantiles: if model.quantiles().is_some() { (0..q).map(|_| Vec::with_capacity(n)).collect() } else { Vec::new() },
        crossings: 0,
        horizon: ws.shape().horizon,
    };
    for s in ws.samples() {
        let pred = model.predict(params, s)?;
        for (row, &y) in pred.chunks_exact(q).zip(&s.y_future) {
            out.point.push(row[central]);
            out.truth.push(y);
            if model.quantiles().is_some() {
                for (col, v) in out.quantiles.iter_mut().zip(row) {
                    col.push(*v);
                }
                if row.windows(2).any(|w| w[1] < w[0]) {
                    out.crossings += 1;
                }
            }
        }
    }
    Ok(out)
}

/// Pools every (sample, step) pair of `ws` and scores the model.
pub fn evaluate(
    model: &ForecastModel,
    params: &ParamVector,
    ws: &SupervisedWindowSet,
    per_step: bool,
) -> Result<EvalReport> {
    let pooled = pool_forecasts(model, params, ws)?;
    report_from_pooled(&pooled, model.quantiles().map(|q| q.levels()), per_step)
}

pub fn report_from_pooled(pooled: &PooledForecast, levels: Option<&[f64]>, per_step: bool) -> Result<EvalReport> {
    let cv = cv_rmse(&pooled.point, &pooled.truth)?;
    let bias = nmbe(&pooled.point, &pooled.truth)?;
    let rho_risk = match levels {
        Some(levels) => levels
            .iter()
            .zip(&pooled.quantiles)
            .map(|(&p, col)| Ok(QuantileRisk { p, rho_risk: rho_risk(col, &pooled.truth, p)? }))
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    let rows = pooled.truth.len();
    let per_step = if per_step {
        (0..pooled.horizon)
            .map(|step| {
                let pick = |v: &[f64]| v.iter().skip(step).step_by(pooled.horizon).copied().collect::<Vec<_>>();
                let (p, y) = (pick(&pooled.point), pick(&pooled.truth));
                Ok(StepMetrics { step: step + 1, cv_rmse_pct: cv_rmse(&p, &y)?, nmbe_pct: nmbe(&p, &y)? })
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    Ok(EvalReport {
        cv_rmse_pct: cv,
        nmbe_pct: bias,
        rho_risk,
        n_points: rows,
        compliance: Compliance::evaluate(cv, bias),
        quantile_crossing_rate: levels.map(|_| pooled.crossings as f64 / rows as f64),
        per_step,
    })
}

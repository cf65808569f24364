use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{ForecastModel, LossKind};
use crate::params::ParamVector;
use crate::rng::{derive_seed, stream_rng};
use crate::series::{Sample, SupervisedWindowSet};
use crate::{Error, Result};

/// Local training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Client learning rate.
    pub eta_c: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub loss: LossKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { eta_c: 0.01, epochs: 1, batch_size: 32, seed: 0, loss: LossKind::Squared }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        // eta_c = 0 is accepted: it freezes the parameters
        if !(self.eta_c >= 0.0 && self.eta_c.is_finite()) {
            return Err(Error::Invalid(format!("eta_c must be finite and >= 0, got {}", self.eta_c)));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Invalid("epochs and batch_size must be at least 1".into()));
        }
        Ok(())
    }

    /// The configuration used for communication round `round`: identical
    /// except for an independent shuffling seed.
    pub fn for_round(&self, round: usize) -> Self {
        Self { seed: derive_seed(self.seed, round as u64), ..*self }
    }
}

/// Mean per-sample training loss of each epoch, measured on each batch
/// just before its update.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossCurve(pub Vec<f64>);

impl LossCurve {
    pub fn last(&self) -> Option<f64> {
        self.0.last().copied()
    }
}

/// `E` epochs of mini-batch SGD, `θ ← θ − η_c ∇L(θ; B)`, reshuffling the
/// dataset from the configured seed at the start of every epoch.
pub fn train_local(
    model: &ForecastModel,
    init: &ParamVector,
    dataset: &SupervisedWindowSet,
    cfg: &TrainConfig,
) -> Result<(ParamVector, LossCurve)> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::Invalid("cannot train on an empty dataset".into()));
    }
    if !model.is_trainable() {
        return Err(Error::NotTrainable);
    }

    let samples: &[Sample] = dataset.samples();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut rng = stream_rng(cfg.seed, 0);
    let mut params = init.clone();
    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut batch: Vec<&Sample> = Vec::with_capacity(cfg.batch_size);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| &samples[i]));
            let diverged = Error::Diverged { epoch, batch: b };
            let (loss, grad) = match model.loss_and_gradient(&params, &batch, cfg.loss) {
                Ok(v) => v,
                Err(Error::NonFinite) => return Err(diverged),
                Err(e) => return Err(e),
            };
            if !loss.is_finite() {
                return Err(diverged);
            }
            epoch_loss += loss * chunk.len() as f64;
            params = params.zip_with(&grad, |p, g| p - cfg.eta_c * g).map_err(|_| diverged)?;
        }
        curve.push(epoch_loss / samples.len() as f64);
    }
    Ok((params, LossCurve(curve)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelSpec;
    use crate::series::{make_windows, TimeSeries, WindowSpec};

    fn linear_data() -> SupervisedWindowSet {
        // y_t = 0.5·y_{t-1} + 0.3·y_{t-2} + 1 : a deterministic AR(2)
        let mut y = alloc::vec![1.0, 2.0];
        for i in 2..300 {
            let next = 0.5 * y[i - 1] + 0.3 * y[i - 2] + 1.0 + libm::sin(i as f64 * 0.37);
            y.push(next);
        }
        let s = TimeSeries::from_values("y", 0, 3600, &y).unwrap();
        make_windows(&[s], &WindowSpec::new(3, 1, "y")).unwrap()
    }

    fn model(ws: &SupervisedWindowSet) -> ForecastModel {
        ForecastModel::new(ModelSpec::Linear, ws.shape(), None).unwrap().fitted(ws).unwrap()
    }

    #[test]
    fn zero_learning_rate_freezes_params() {
        let ws = linear_data();
        let m = model(&ws);
        let init = m.init_params(0).map(|v| v + 0.25).unwrap();
        let cfg = TrainConfig { eta_c: 0.0, epochs: 3, ..TrainConfig::default() };
        let (out, _) = train_local(&m, &init, &ws, &cfg).unwrap();
        assert_eq!(out, init);
    }

    #[test]
    fn loss_decreases_on_linear_data() {
        let ws = linear_data();
        let m = model(&ws);
        let cfg = TrainConfig { eta_c: 0.002, epochs: 8, batch_size: 16, ..TrainConfig::default() };
        let (_, curve) = train_local(&m, &m.init_params(0), &ws, &cfg).unwrap();
        for w in curve.0.windows(2) {
            assert!(w[1] < w[0], "{:?}", curve.0);
        }
    }

    #[test]
    fn training_is_deterministic_and_content_addressed() {
        let ws = linear_data();
        let m = model(&ws);
        let cfg = TrainConfig { epochs: 2, seed: 9, eta_c: 0.001, ..TrainConfig::default() };
        let a = train_local(&m, &m.init_params(0), &ws, &cfg).unwrap();
        let copy = ws.clone();
        let b = train_local(&m, &m.init_params(0), &copy, &cfg).unwrap();
        assert_eq!(a, b);
        let c = train_local(&m, &m.init_params(0), &ws, &TrainConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn divergence_is_reported() {
        let ws = linear_data();
        let m = model(&ws);
        let cfg = TrainConfig { eta_c: 1e6, epochs: 50, ..TrainConfig::default() };
        assert!(matches!(
            train_local(&m, &m.init_params(0), &ws, &cfg),
            Err(Error::Diverged { .. })
        ));
    }

    #[test]
    fn rejects_bad_inputs() {
        let ws = linear_data();
        let m = model(&ws);
        let bad = TrainConfig { epochs: 0, ..TrainConfig::default() };
        assert!(train_local(&m, &m.init_params(0), &ws, &bad).is_err());
        let sn = ForecastModel::new(ModelSpec::SeasonalNaive { period: 1 }, ws.shape(), None).unwrap();
        assert_eq!(
            train_local(&sn, &sn.init_params(0), &ws, &TrainConfig::default()),
            Err(Error::NotTrainable)
        );
    }

    #[test]
    fn round_configs_get_distinct_seeds() {
        let cfg = TrainConfig::default();
        assert_ne!(cfg.for_round(0).seed, cfg.for_round(1).seed);
        assert_eq!(cfg.for_round(3).eta_c, cfg.eta_c);
    }
}

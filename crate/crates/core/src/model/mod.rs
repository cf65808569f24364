//! Desk-scale forecasting models over flat parameter vectors.
//!
//! A [`ForecastModel`] maps the flattened input `y_past ‖ xb ‖ xf` of a
//! [`Sample`] to `h` point forecasts, or to an `h × |Q|` row-major matrix of
//! quantile forecasts. The trainable variants are a linear map and a ReLU
//! MLP; the seasonal-naive baseline has no parameters at all.
//!
//! Inputs are standardized with a [`Scaler`] fitted on training data, and
//! outputs are produced in standardized target units and mapped back, so
//! losses and gradients are always in the target's own units.

mod loss;
mod net;
mod train;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use loss::{loss_quantile, loss_squared, pinball, pinball_grad, LossKind, QuantileLevels};
pub use train::{train_local, LossCurve, TrainConfig};

use crate::params::{LayoutTag, ParamVector};
use crate::rng::stream_rng;
use crate::series::{InputShape, Sample, SupervisedWindowSet};
use crate::{Error, Result};
use net::Dense;

/// Architecture of a forecaster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// Repeats the value observed `period` steps earlier.
    SeasonalNaive { period: usize },
    Linear,
    DenseNet { hidden: Vec<usize> },
}

/// Per-feature and target standardization, fitted on a training split.
///
/// Features whose standard deviation is below `1e-12` pass through
/// unchanged (zero shift, unit scale).
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    feature_mean: Vec<f64>,
    feature_scale: Vec<f64>,
    target_mean: f64,
    target_scale: f64,
}

const MIN_STD: f64 = 1e-12;

impl Scaler {
    pub fn identity(features: usize) -> Self {
        Self {
            feature_mean: vec![0.0; features],
            feature_scale: vec![1.0; features],
            target_mean: 0.0,
            target_scale: 1.0,
        }
    }

    /// Population mean and standard deviation of every flattened feature and
    /// of all horizon targets.
    pub fn fit(ws: &SupervisedWindowSet) -> Result<Self> {
        if ws.is_empty() {
            return Err(Error::Invalid("cannot fit a scaler on an empty window set".into()));
        }
        let d = ws.shape().flat_len();
        let n = ws.len() as f64;
        let mut mean = vec![0.0; d];
        let mut buf = Vec::with_capacity(d);
        for s in ws.samples() {
            flatten_into(s, &mut buf);
            mean.iter_mut().zip(&buf).for_each(|(m, x)| *m += x / n);
        }
        let mut var = vec![0.0; d];
        for s in ws.samples() {
            flatten_into(s, &mut buf);
            var.iter_mut().zip(&buf).zip(&mean).for_each(|((v, x), m)| *v += (x - m) * (x - m) / n);
        }
        let (feature_mean, feature_scale) = mean
            .into_iter()
            .zip(var)
            .map(|(m, v)| {
                let sd = libm::sqrt(v);
                if sd < MIN_STD {
                    (0.0, 1.0)
                } else {
                    (m, sd)
                }
            })
            .unzip();

        let targets = ws.samples().iter().flat_map(|s| s.y_future.iter().copied());
        let count = (ws.len() * ws.shape().horizon) as f64;
        let t_mean = targets.clone().sum::<f64>() / count;
        let t_var = targets.map(|y| (y - t_mean) * (y - t_mean)).sum::<f64>() / count;
        let t_sd = libm::sqrt(t_var);
        let (target_mean, target_scale) = if t_sd < MIN_STD { (0.0, 1.0) } else { (t_mean, t_sd) };
        Ok(Self { feature_mean, feature_scale, target_mean, target_scale })
    }

    pub fn features(&self) -> usize {
        self.feature_mean.len()
    }

    fn transform(&self, x: &mut [f64]) {
        for ((v, m), s) in x.iter_mut().zip(&self.feature_mean).zip(&self.feature_scale) {
            *v = (*v - m) / s;
        }
    }
}

fn flatten_into(s: &Sample, buf: &mut Vec<f64>) {
    buf.clear();
    buf.extend_from_slice(&s.y_past);
    buf.extend_from_slice(&s.xb_past);
    buf.extend_from_slice(&s.xf_future);
}

/// A forecaster: architecture, input shape, output mode and scaler.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastModel {
    spec: ModelSpec,
    shape: InputShape,
    quantiles: Option<QuantileLevels>,
    scaler: Scaler,
    net: Option<Dense>,
    layout: LayoutTag,
}

impl ForecastModel {
    pub fn new(spec: ModelSpec, shape: InputShape, quantiles: Option<QuantileLevels>) -> Result<Self> {
        if shape.lookback == 0 || shape.horizon == 0 {
            return Err(Error::Shape("lookback and horizon must be at least 1".into()));
        }
        let outputs = shape.horizon * quantiles.as_ref().map_or(1, QuantileLevels::len);
        let inputs = shape.flat_len();
        let mut tag = String::new();
        let net = match &spec {
            ModelSpec::SeasonalNaive { period } => {
                if *period == 0 || *period > shape.lookback {
                    return Err(Error::Shape(format!(
                        "seasonal period {period} must be in 1..={} (the lookback)",
                        shape.lookback
                    )));
                }
                let _ = write!(tag, "seasonal_naive;period={period}");
                None
            }
            ModelSpec::Linear => {
                let _ = write!(tag, "linear;in={inputs};out={outputs}");
                Some(Dense::new(vec![inputs, outputs]))
            }
            ModelSpec::DenseNet { hidden } => {
                if hidden.contains(&0) {
                    return Err(Error::Shape("hidden layers must have at least one unit".into()));
                }
                let _ = write!(tag, "dense;in={inputs};hidden={hidden:?};out={outputs}");
                let mut dims = vec![inputs];
                dims.extend_from_slice(hidden);
                dims.push(outputs);
                Some(Dense::new(dims))
            }
        };
        Ok(Self {
            spec,
            shape,
            quantiles,
            scaler: Scaler::identity(inputs),
            net,
            layout: LayoutTag::new(tag),
        })
    }

    pub fn with_scaler(mut self, scaler: Scaler) -> Result<Self> {
        if scaler.features() != self.shape.flat_len() {
            return Err(Error::Shape(format!(
                "scaler has {} features, model expects {}",
                scaler.features(),
                self.shape.flat_len()
            )));
        }
        self.scaler = scaler;
        Ok(self)
    }

    /// Fits the scaler on `train`.
    pub fn fitted(self, train: &SupervisedWindowSet) -> Result<Self> {
        let scaler = Scaler::fit(train)?;
        self.with_scaler(scaler)
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn shape(&self) -> InputShape {
        self.shape
    }

    pub fn quantiles(&self) -> Option<&QuantileLevels> {
        self.quantiles.as_ref()
    }

    pub fn scaler(&self) -> &Scaler {
        &self.scaler
    }

    pub fn layout(&self) -> &LayoutTag {
        &self.layout
    }

    /// Columns per horizon step: 1, or the number of quantile levels.
    pub fn outputs_per_step(&self) -> usize {
        self.quantiles.as_ref().map_or(1, QuantileLevels::len)
    }

    pub fn output_len(&self) -> usize {
        self.shape.horizon * self.outputs_per_step()
    }

    pub fn param_len(&self) -> usize {
        self.net.as_ref().map_or(0, Dense::param_len)
    }

    pub fn is_trainable(&self) -> bool {
        self.net.is_some()
    }

    /// Initial parameters: zeros for the linear map, Glorot-uniform weights
    /// with zero biases for the MLP, empty for seasonal naive.
    pub fn init_params(&self, seed: u64) -> ParamVector {
        match (&self.spec, &self.net) {
            (ModelSpec::DenseNet { .. }, Some(net)) => {
                let mut rng = stream_rng(seed, 0);
                ParamVector::new(self.layout.clone(), net.glorot(&mut rng))
                    .expect("glorot draws are finite")
            }
            _ => ParamVector::zeros(self.layout.clone(), self.param_len()),
        }
    }

    fn check_params(&self, params: &ParamVector) -> Result<()> {
        if params.layout() != &self.layout || params.len() != self.param_len() {
            return Err(Error::LayoutMismatch {
                expected: String::from(self.layout.as_str()),
                found: String::from(params.layout().as_str()),
            });
        }
        Ok(())
    }

    fn check_sample(&self, s: &Sample) -> Result<()> {
        let sh = &self.shape;
        let ok = s.y_past.len() == sh.lookback
            && s.xb_past.len() == sh.lookback * sh.past_covariates
            && s.xf_future.len() == sh.horizon * sh.future_covariates;
        if !ok {
            return Err(Error::Shape(format!("sample inputs do not match {sh:?}")));
        }
        Ok(())
    }

    fn scaled_input(&self, s: &Sample) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.shape.flat_len());
        flatten_into(s, &mut x);
        self.scaler.transform(&mut x);
        x
    }

    /// Forecast for one sample: `h` values, or `h × |Q|` row-major.
    pub fn predict(&self, params: &ParamVector, sample: &Sample) -> Result<Vec<f64>> {
        self.check_params(params)?;
        self.check_sample(sample)?;
        match (&self.spec, &self.net) {
            (ModelSpec::SeasonalNaive { period }, _) => Ok(self.seasonal_naive(*period, sample)),
            (_, Some(net)) => {
                let trace = net.forward(params.values(), self.scaled_input(sample));
                let (m, s) = (self.scaler.target_mean, self.scaler.target_scale);
                Ok(trace.output().iter().map(|z| z * s + m).collect())
            }
            _ => unreachable!("trainable specs always carry a network"),
        }
    }

    /// `ŷ_{t+i} = y_{t+i-k·period}` with the smallest `k` that lands inside
    /// the lookback window.
    fn seasonal_naive(&self, period: usize, sample: &Sample) -> Vec<f64> {
        let w = self.shape.lookback;
        let q = self.outputs_per_step();
        (0..self.shape.horizon)
            .flat_map(|i| {
                let v = sample.y_past[w - period + i % period];
                core::iter::repeat_n(v, q)
            })
            .collect()
    }

    pub fn predict_set(&self, params: &ParamVector, ws: &SupervisedWindowSet) -> Result<Vec<Vec<f64>>> {
        ws.samples().iter().map(|s| self.predict(params, s)).collect()
    }

    /// Loss of one sample under `loss`.
    pub fn sample_loss(&self, params: &ParamVector, sample: &Sample, loss: LossKind) -> Result<f64> {
        let pred = self.predict(params, sample)?;
        self.loss_of(&pred, &sample.y_future, loss)
    }

    fn loss_of(&self, pred: &[f64], truth: &[f64], loss: LossKind) -> Result<f64> {
        match (loss, &self.quantiles) {
            (LossKind::Squared, None) => loss_squared(pred, truth),
            (LossKind::Quantile, Some(q)) => loss_quantile(pred, truth, q.levels()),
            (LossKind::Squared, Some(_)) => {
                Err(Error::Shape("squared loss needs a point forecaster".into()))
            }
            (LossKind::Quantile, None) => {
                Err(Error::Shape("quantile loss needs quantile levels on the model".into()))
            }
        }
    }

    /// Mean loss over a batch.
    pub fn batch_loss(&self, params: &ParamVector, batch: &[&Sample], loss: LossKind) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Invalid("empty batch".into()));
        }
        let mut total = 0.0;
        for s in batch {
            total += self.sample_loss(params, s, loss)?;
        }
        Ok(total / batch.len() as f64)
    }

    /// Analytic gradient of the mean batch loss.
    pub fn gradient(&self, params: &ParamVector, batch: &[&Sample], loss: LossKind) -> Result<ParamVector> {
        Ok(self.loss_and_gradient(params, batch, loss)?.1)
    }

    /// Mean batch loss and its gradient in one pass.
    pub fn loss_and_gradient(
        &self,
        params: &ParamVector,
        batch: &[&Sample],
        loss: LossKind,
    ) -> Result<(f64, ParamVector)> {
        let net = self.net.as_ref().ok_or(Error::NotTrainable)?;
        self.check_params(params)?;
        if batch.is_empty() {
            return Err(Error::Invalid("empty batch".into()));
        }
        let n = batch.len() as f64;
        let (t_mean, t_scale) = (self.scaler.target_mean, self.scaler.target_scale);
        let mut grad = vec![0.0; params.len()];
        let mut total = 0.0;
        let mut grad_out = vec![0.0; self.output_len()];
        for s in batch {
            self.check_sample(s)?;
            if s.y_future.len() != self.shape.horizon {
                return Err(Error::Shape("sample targets do not match the horizon".into()));
            }
            let trace = net.forward(params.values(), self.scaled_input(s));
            let pred: Vec<f64> = trace.output().iter().map(|z| z * t_scale + t_mean).collect();
            total += self.loss_of(&pred, &s.y_future, loss)?;
            match &self.quantiles {
                None => {
                    for ((g, p), y) in grad_out.iter_mut().zip(&pred).zip(&s.y_future) {
                        *g = 2.0 * (p - y);
                    }
                }
                Some(q) => {
                    let levels = q.levels();
                    for (i, y) in s.y_future.iter().enumerate() {
                        for (j, p) in levels.iter().enumerate() {
                            let k = i * levels.len() + j;
                            grad_out[k] = pinball_grad(pred[k], *y, *p);
                        }
                    }
                }
            }
            // chain rule through the target de-standardization, averaged over the batch
            net.backward(params.values(), &trace, &grad_out, t_scale / n, &mut grad);
        }
        let grad = ParamVector::new(self.layout.clone(), grad)?;
        Ok((total / n, grad))
    }
}
